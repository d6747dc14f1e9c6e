//! Bipartite graphs, side partitions and quotient-graph edge counting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of assignments an exhaustive search may visit.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    left_size: usize,
    right_size: usize,
    /// Sorted right neighbours of each left vertex.
    left_adj: Vec<Vec<usize>>,
    /// Sorted left neighbours of each right vertex.
    right_adj: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// An assignment of `ground_size` elements to parts `0..num_parts`.
/// Parts may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    ground_size: usize,
    num_parts: usize,
    assignment: Vec<usize>,
}

impl BipartiteGraph {
    /// Builds a graph from `(left, right)` edges; duplicates are dropped.
    pub fn from_edges<I>(left_size: usize, right_size: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut left_adj = vec![Vec::new(); left_size];
        let mut right_adj = vec![Vec::new(); right_size];
        for (a, b) in edges {
            if a >= left_size || b >= right_size {
                return Err(Error::Validation(format!("edge ({a},{b}) outside {left_size}+{right_size} vertices")));
            }
            left_adj[a].push(b);
            right_adj[b].push(a);
        }
        for l in left_adj.iter_mut().chain(right_adj.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Ok(BipartiteGraph { left_size, right_size, left_adj, right_adj })
    }

    pub fn complete(left_size: usize, right_size: usize) -> Self {
        let edges = (0..left_size).flat_map(|a| (0..right_size).map(move |b| (a, b)));
        Self::from_edges(left_size, right_size, edges).expect("in range")
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn edge_count(&self) -> usize {
        self.left_adj.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left_adj.iter().enumerate().flat_map(|(a, n)| n.iter().map(move |&b| (a, b)))
    }

    pub fn left_neighbors(&self, v: usize) -> &[usize] {
        &self.left_adj[v]
    }

    pub fn right_neighbors(&self, v: usize) -> &[usize] {
        &self.right_adj[v]
    }

    pub fn left_degree(&self, v: usize) -> usize {
        self.left_adj[v].len()
    }

    pub fn right_degree(&self, v: usize) -> usize {
        self.right_adj[v].len()
    }

    /// Swaps the roles of the two sides.
    pub fn transpose(&self) -> Self {
        BipartiteGraph {
            left_size: self.right_size,
            right_size: self.left_size,
            left_adj: self.right_adj.clone(),
            right_adj: self.left_adj.clone(),
        }
    }

    fn side_size(&self, side: Side) -> usize {
        match side {
            Side::Left => self.left_size,
            Side::Right => self.right_size,
        }
    }
}

impl Partition {
    pub fn new(num_parts: usize, assignment: Vec<usize>) -> Result<Self> {
        if num_parts == 0 {
            return Err(Error::BadParameters("a partition needs at least one part".into()));
        }
        if let Some(&bad) = assignment.iter().find(|&&p| p >= num_parts) {
            return Err(Error::BadPartIndex { part: bad, parts: num_parts });
        }
        Ok(Partition { ground_size: assignment.len(), num_parts, assignment })
    }

    /// Each element in its own part.
    pub fn singletons(n: usize) -> Self {
        Partition { ground_size: n, num_parts: n.max(1), assignment: (0..n).collect() }
    }

    /// Everything in part 0 of `num_parts`.
    pub fn constant(n: usize, num_parts: usize) -> Self {
        Partition { ground_size: n, num_parts: num_parts.max(1), assignment: vec![0; n] }
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn part_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    /// Members of each part, ascending.
    pub fn parts(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_parts];
        for (v, &p) in self.assignment.iter().enumerate() {
            out[p].push(v);
        }
        out
    }

    pub fn nonempty_parts(&self) -> usize {
        self.parts().iter().filter(|p| !p.is_empty()).count()
    }
}

fn check_sides(g: &BipartiteGraph, p1: &Partition, p2: &Partition) -> Result<()> {
    if p1.ground_size != g.left_size {
        return Err(Error::SideMismatch { expected: g.left_size, got: p1.ground_size });
    }
    if p2.ground_size != g.right_size {
        return Err(Error::SideMismatch { expected: g.right_size, got: p2.ground_size });
    }
    Ok(())
}

/// Number of `(part1, part2)` pairs joined by at least one edge.
pub fn quotient_edge_count(g: &BipartiteGraph, p1: &Partition, p2: &Partition) -> Result<usize> {
    check_sides(g, p1, p2)?;
    Ok(quotient_edges_unchecked(g, p1.assignment(), p1.num_parts(), p2.assignment(), p2.num_parts()))
}

/// Hot path of the exhaustive solvers: no validation, a flat bitmap of seen
/// part pairs.
pub(crate) fn quotient_edges_unchecked(g: &BipartiteGraph, a1: &[usize], k1: usize, a2: &[usize], k2: usize) -> usize {
    let cells = k1 * k2;
    if cells <= 64 {
        let mut seen = 0u64;
        for (a, nb) in g.left_adj.iter().enumerate() {
            let row = a1[a] * k2;
            for &b in nb {
                seen |= 1u64 << (row + a2[b]);
            }
        }
        seen.count_ones() as usize
    } else {
        let mut seen = vec![0u64; cells.div_ceil(64)];
        let mut count = 0;
        for (a, nb) in g.left_adj.iter().enumerate() {
            let row = a1[a] * k2;
            for &b in nb {
                let c = row + a2[b];
                let (w, bit) = (c / 64, 1u64 << (c % 64));
                if seen[w] & bit == 0 {
                    seen[w] |= bit;
                    count += 1;
                }
            }
        }
        count
    }
}

/// Degree of part `part` on `side` in the quotient graph.
pub fn quotient_degree(g: &BipartiteGraph, p1: &Partition, p2: &Partition, side: Side, part: usize) -> Result<usize> {
    check_sides(g, p1, p2)?;
    let (own, other, adj) = match side {
        Side::Left => (p1, p2, &g.left_adj),
        Side::Right => (p2, p1, &g.right_adj),
    };
    if part >= own.num_parts {
        return Err(Error::BadPartIndex { part, parts: own.num_parts });
    }
    let mut seen = vec![false; other.num_parts];
    for (v, nb) in adj.iter().enumerate() {
        if own.assignment[v] == part {
            for &u in nb {
                seen[other.assignment[u]] = true;
            }
        }
    }
    Ok(seen.into_iter().filter(|&s| s).count())
}

/// `|∪_{v ∈ subset} N(v)|` for a set of right vertices.
pub fn distinct_left_neighbors(g: &BipartiteGraph, right_subset: &[usize]) -> usize {
    let mut seen = vec![false; g.left_size];
    let mut count = 0;
    for &v in right_subset {
        for &u in &g.right_adj[v] {
            if !std::mem::replace(&mut seen[u], true) {
                count += 1;
            }
        }
    }
    count
}

/// Number of distinct left neighbours of every part of `p2`
/// (`deg_{V1,P2}` in quotient notation).
pub fn right_part_degrees(g: &BipartiteGraph, p2: &Partition) -> Result<Vec<usize>> {
    if p2.ground_size != g.right_size {
        return Err(Error::SideMismatch { expected: g.right_size, got: p2.ground_size });
    }
    Ok(p2.parts().iter().map(|part| distinct_left_neighbors(g, part)).collect())
}

/// `num_parts^ground_size`, or `None` on overflow.
pub fn assignment_count(ground_size: usize, num_parts: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..ground_size {
        acc = acc.checked_mul(num_parts as u128)?;
    }
    Some(acc)
}

pub(crate) fn check_cap(requested: Option<u128>, cap: u128) -> Result<u128> {
    match requested {
        Some(r) if r <= cap => Ok(r),
        Some(r) => Err(Error::EnumerationCapExceeded { requested: r, cap }),
        None => Err(Error::EnumerationCapExceeded { requested: u128::MAX, cap }),
    }
}

/// Writes the assignment with lexicographic rank `index` (position 0 most
/// significant) into `out`.
pub(crate) fn decode_assignment(mut index: u128, num_parts: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % num_parts as u128) as usize;
        index /= num_parts as u128;
    }
}

/// Advances `a` to the lexicographically next assignment; false after the last.
#[inline]
pub(crate) fn next_assignment(a: &mut [usize], num_parts: usize) -> bool {
    for slot in a.iter_mut().rev() {
        *slot += 1;
        if *slot < num_parts {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Streams every assignment function `[ground_size] → [num_parts]` in
/// lexicographic order.
pub fn enumerate_partitions(ground_size: usize, num_parts: usize, cap: u128) -> Result<PartitionIter> {
    if num_parts == 0 {
        return Err(Error::BadParameters("a partition needs at least one part".into()));
    }
    let total = check_cap(assignment_count(ground_size, num_parts), cap)?;
    Ok(PartitionIter { current: vec![0; ground_size], num_parts, remaining: total })
}

#[derive(Debug, Clone)]
pub struct PartitionIter {
    current: Vec<usize>,
    num_parts: usize,
    remaining: u128,
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out =
            Partition { ground_size: self.current.len(), num_parts: self.num_parts, assignment: self.current.clone() };
        next_assignment(&mut self.current, self.num_parts);
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

impl Side {
    pub fn size_in(self, g: &BipartiteGraph) -> usize {
        g.side_size(self)
    }
}
