//! Broadcast channels `W(y1 y2 | x)` over index alphabets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::scalar::{sum, Scalar};

/// Row-normalization tolerance applied when a table is validated.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Tolerance for recognising 0/1 entries of a deterministic channel.
pub const DETERMINISTIC_TOL: f64 = 1e-12;
/// Default cap on the number of entries of a tensor power.
pub const DEFAULT_TENSOR_CAP: u128 = 100_000_000;

/// Dense conditional distribution indexed `(x, y1, y2)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable<T> {
    input_size: usize,
    out1_size: usize,
    out2_size: usize,
    probs: Vec<T>,
}

/// Single-receiver channel `W_b(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable<T> {
    input_size: usize,
    out_size: usize,
    probs: Vec<T>,
}

/// A channel whose every input lands on exactly one output pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicChannel {
    input_size: usize,
    out1_size: usize,
    out2_size: usize,
    pairs: Vec<(usize, usize)>,
}

fn normalization_tol<T: Scalar>() -> T {
    T::max_of(T::from_f64_value(NORMALIZATION_TOL), T::tolerance())
}

impl<T: Scalar> ChannelTable<T> {
    /// Validates a raw table: non-negative entries and rows summing to one.
    pub fn new(input_size: usize, out1_size: usize, out2_size: usize, probs: Vec<T>) -> Result<Self> {
        let expected = input_size
            .checked_mul(out1_size)
            .and_then(|v| v.checked_mul(out2_size))
            .ok_or_else(|| Error::DimensionMismatch("alphabet product overflows".into()))?;
        if input_size == 0 || out1_size == 0 || out2_size == 0 {
            return Err(Error::DimensionMismatch("alphabets must be nonempty".into()));
        }
        if probs.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} entries for {input_size}x{out1_size}x{out2_size}, got {}",
                probs.len()
            )));
        }
        let table = ChannelTable { input_size, out1_size, out2_size, probs };
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<()> {
        let tol = normalization_tol::<T>();
        for x in 0..self.input_size {
            for y1 in 0..self.out1_size {
                for y2 in 0..self.out2_size {
                    if self.get(x, y1, y2).is_negative() {
                        return Err(Error::NegativeProbability { x, y1, y2 });
                    }
                }
            }
            let s = sum(self.row(x).iter().cloned());
            if (s.clone() - T::one()).abs() > tol {
                return Err(Error::RowNotNormalized { x, sum: s.to_f64_value() });
            }
        }
        Ok(())
    }

    /// Builds a table from a nested `[x][y1][y2]` array.
    pub fn from_nested(rows: Vec<Vec<Vec<T>>>) -> Result<Self> {
        let input_size = rows.len();
        let out1_size = rows.first().map_or(0, |r| r.len());
        let out2_size = rows.first().and_then(|r| r.first()).map_or(0, |r| r.len());
        let mut probs = Vec::with_capacity(input_size * out1_size * out2_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != out1_size {
                return Err(Error::DimensionMismatch(format!("row x={x} has {} y1 entries", row.len())));
            }
            for (y1, col) in row.into_iter().enumerate() {
                if col.len() != out2_size {
                    return Err(Error::DimensionMismatch(format!("row x={x}, y1={y1} has {} y2 entries", col.len())));
                }
                probs.extend(col);
            }
        }
        Self::new(input_size, out1_size, out2_size, probs)
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn out1_size(&self) -> usize {
        self.out1_size
    }

    pub fn out2_size(&self) -> usize {
        self.out2_size
    }

    #[inline]
    pub fn index(&self, x: usize, y1: usize, y2: usize) -> usize {
        (x * self.out1_size + y1) * self.out2_size + y2
    }

    #[inline]
    pub fn get(&self, x: usize, y1: usize, y2: usize) -> &T {
        &self.probs[self.index(x, y1, y2)]
    }

    /// The `|Y1|·|Y2|` block for input `x`, laid out `[y1][y2]`.
    pub fn row(&self, x: usize) -> &[T] {
        let w = self.out1_size * self.out2_size;
        &self.probs[x * w..(x + 1) * w]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn marginals(&self) -> (MarginalTable<T>, MarginalTable<T>) {
        let mut m1 = vec![T::zero(); self.input_size * self.out1_size];
        let mut m2 = vec![T::zero(); self.input_size * self.out2_size];
        for x in 0..self.input_size {
            for y1 in 0..self.out1_size {
                for y2 in 0..self.out2_size {
                    let v = self.get(x, y1, y2).clone();
                    let a = x * self.out1_size + y1;
                    m1[a] = m1[a].clone() + v.clone();
                    let b = x * self.out2_size + y2;
                    m2[b] = m2[b].clone() + v;
                }
            }
        }
        (
            MarginalTable { input_size: self.input_size, out_size: self.out1_size, probs: m1 },
            MarginalTable { input_size: self.input_size, out_size: self.out2_size, probs: m2 },
        )
    }

    /// Tensor product `self ⊗ other`; `other`'s indices are least significant.
    pub fn tensor(&self, other: &Self) -> Self {
        let (a1, a2) = (self.out1_size, self.out2_size);
        let (b1, b2) = (other.out1_size, other.out2_size);
        let out1 = a1 * b1;
        let out2 = a2 * b2;
        let input = self.input_size * other.input_size;
        let mut probs = vec![T::zero(); input * out1 * out2];
        for x in 0..self.input_size {
            for xp in 0..other.input_size {
                let xc = x * other.input_size + xp;
                for y1 in 0..a1 {
                    for y2 in 0..a2 {
                        let w = self.get(x, y1, y2);
                        if w.is_zero() {
                            continue;
                        }
                        for y1p in 0..b1 {
                            for y2p in 0..b2 {
                                let idx = (xc * out1 + y1 * b1 + y1p) * out2 + y2 * b2 + y2p;
                                probs[idx] = w.clone() * other.get(xp, y1p, y2p).clone();
                            }
                        }
                    }
                }
            }
        }
        ChannelTable { input_size: input, out1_size: out1, out2_size: out2, probs }
    }

    /// `W^{⊗n}` with composite indices row-major over the factors, factor 0
    /// most significant.
    pub fn tensor_power(&self, n: usize, cap: u128) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParameters("tensor power needs n >= 1".into()));
        }
        let per = (self.input_size as u128) * (self.out1_size as u128) * (self.out2_size as u128);
        let mut requested: u128 = 1;
        for _ in 0..n {
            requested = requested.saturating_mul(per);
        }
        if requested > cap {
            return Err(Error::SizeCapExceeded { requested, cap });
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.tensor(self);
        }
        Ok(acc)
    }

    pub fn is_deterministic(&self) -> bool {
        self.to_deterministic().is_ok()
    }

    pub fn to_deterministic(&self) -> Result<DeterministicChannel> {
        let tol = T::from_f64_value(DETERMINISTIC_TOL);
        let mut pairs = Vec::with_capacity(self.input_size);
        for x in 0..self.input_size {
            let mut found = None;
            for y1 in 0..self.out1_size {
                for y2 in 0..self.out2_size {
                    let v = self.get(x, y1, y2);
                    if v.abs() <= tol {
                        continue;
                    }
                    if (v.clone() - T::one()).abs() <= tol && found.is_none() {
                        found = Some((y1, y2));
                    } else {
                        return Err(Error::NotDeterministic { x });
                    }
                }
            }
            pairs.push(found.ok_or(Error::NotDeterministic { x })?);
        }
        DeterministicChannel::new(self.out1_size, self.out2_size, pairs)
    }

    /// Rescales each row to sum to exactly one (up to rounding).
    pub fn renormalized(&self) -> Self {
        let mut probs = self.probs.clone();
        let w = self.out1_size * self.out2_size;
        for chunk in probs.chunks_mut(w) {
            let s = sum(chunk.iter().cloned());
            if !s.is_zero() {
                for v in chunk.iter_mut() {
                    *v = v.clone() / s.clone();
                }
            }
        }
        ChannelTable { probs, ..self.clone() }
    }

    /// Relabels alphabets: entry `(x, y1, y2)` moves to
    /// `(px[x], p1[y1], p2[y2])`.
    pub fn permuted(&self, px: &[usize], p1: &[usize], p2: &[usize]) -> Result<Self> {
        check_permutation(px, self.input_size)?;
        check_permutation(p1, self.out1_size)?;
        check_permutation(p2, self.out2_size)?;
        let mut probs = vec![T::zero(); self.probs.len()];
        for x in 0..self.input_size {
            for y1 in 0..self.out1_size {
                for y2 in 0..self.out2_size {
                    let idx = self.index(px[x], p1[y1], p2[y2]);
                    probs[idx] = self.get(x, y1, y2).clone();
                }
            }
        }
        Ok(ChannelTable { probs, ..self.clone() })
    }

    /// Converts every entry to another scalar type without revalidating.
    pub fn cast<U: Scalar>(&self) -> ChannelTable<U> {
        ChannelTable {
            input_size: self.input_size,
            out1_size: self.out1_size,
            out2_size: self.out2_size,
            probs: self.probs.iter().map(crate::scalar::convert).collect(),
        }
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!("permutation of length {} for size {n}", p.len())));
    }
    for &i in p {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadParameters("not a permutation".into()));
        }
    }
    Ok(())
}

impl<T: Scalar> MarginalTable<T> {
    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn out_size(&self) -> usize {
        self.out_size
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.probs[x * self.out_size + y]
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

impl DeterministicChannel {
    pub fn new(out1_size: usize, out2_size: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() || out1_size == 0 || out2_size == 0 {
            return Err(Error::DimensionMismatch("alphabets must be nonempty".into()));
        }
        for (x, &(a, b)) in pairs.iter().enumerate() {
            if a >= out1_size || b >= out2_size {
                return Err(Error::Validation(format!(
                    "pair ({a},{b}) of input x={x} outside {out1_size}x{out2_size}"
                )));
            }
        }
        Ok(DeterministicChannel { input_size: pairs.len(), out1_size, out2_size, pairs })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn out1_size(&self) -> usize {
        self.out1_size
    }

    pub fn out2_size(&self) -> usize {
        self.out2_size
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn to_table<T: Scalar>(&self) -> ChannelTable<T> {
        let mut probs = vec![T::zero(); self.input_size * self.out1_size * self.out2_size];
        for (x, &(a, b)) in self.pairs.iter().enumerate() {
            probs[(x * self.out1_size + a) * self.out2_size + b] = T::one();
        }
        ChannelTable { input_size: self.input_size, out1_size: self.out1_size, out2_size: self.out2_size, probs }
    }

    /// The bipartite graph on `Y1 ⊔ Y2` with an edge for every realised pair.
    pub fn graph(&self) -> BipartiteGraph {
        BipartiteGraph::from_edges(self.out1_size, self.out2_size, self.pairs.iter().copied())
            .expect("pairs validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn uniform_single() -> ChannelTable<f64> {
        ChannelTable::new(1, 2, 2, vec![0.25; 4]).unwrap()
    }

    fn random_table(seed: &[u32], nx: usize, n1: usize, n2: usize) -> ChannelTable<f64> {
        let w = n1 * n2;
        let mut probs = Vec::new();
        for x in 0..nx {
            let raw: Vec<f64> = (0..w).map(|i| (seed[(x * w + i) % seed.len()] % 97 + 1) as f64).collect();
            let s: f64 = raw.iter().sum();
            probs.extend(raw.iter().map(|v| v / s));
        }
        ChannelTable::new(nx, n1, n2, probs).unwrap()
    }

    #[test]
    fn accepts_uniform_single_input() {
        let w = uniform_single();
        assert_eq!(w.input_size(), 1);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = ChannelTable::new(1, 2, 2, vec![0.3, 0.2, 0.2, 0.2]).unwrap_err();
        match err {
            Error::RowNotNormalized { x, sum } => {
                assert_eq!(x, 0);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_entries() {
        let err = ChannelTable::new(1, 2, 1, vec![1.5, -0.5]).unwrap_err();
        assert_eq!(err, Error::NegativeProbability { x: 0, y1: 1, y2: 0 });
    }

    #[test]
    fn rejects_dimension_mismatch() {
        assert!(matches!(ChannelTable::new(2, 2, 2, vec![0.25; 4]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tolerance_boundary() {
        assert!(ChannelTable::new(1, 1, 2, vec![0.5, 0.5 + 5e-10]).is_ok());
        assert!(ChannelTable::new(1, 1, 2, vec![0.5, 0.5 + 2e-9]).is_err());
    }

    #[test]
    fn deterministic_marginal() {
        let d = DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1)]).unwrap();
        let (m1, m2) = d.to_table::<f64>().marginals();
        assert_eq!(*m1.get(0, 0), 1.0);
        assert_eq!(*m1.get(1, 0), 1.0);
        assert_eq!(*m2.get(0, 0), 1.0);
        assert_eq!(*m2.get(1, 1), 1.0);
    }

    #[test]
    fn uniform_marginals() {
        let (m1, m2) = uniform_single().marginals();
        assert_eq!(m1.probs(), &[0.5, 0.5]);
        assert_eq!(m2.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn marginals_match_direct_summation() {
        let w = random_table(&[3, 14, 15, 92, 65, 35, 89, 79, 32, 38, 46, 26], 3, 2, 2);
        let (m1, m2) = w.marginals();
        for x in 0..3 {
            for y1 in 0..2 {
                let direct = w.get(x, y1, 0) + w.get(x, y1, 1);
                assert!((m1.get(x, y1) - direct).abs() < 1e-15);
            }
            for y2 in 0..2 {
                let direct = w.get(x, 0, y2) + w.get(x, 1, y2);
                assert!((m2.get(x, y2) - direct).abs() < 1e-15);
            }
            let s: f64 = (0..2).map(|y| m1.get(x, y)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_power_one_is_identity() {
        let w = random_table(&[1, 2, 3, 4, 5, 6, 7], 2, 3, 2);
        assert_eq!(w.tensor_power(1, DEFAULT_TENSOR_CAP).unwrap(), w);
    }

    #[test]
    fn tensor_square_of_deterministic_is_deterministic() {
        let d = DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1), (1, 1)]).unwrap();
        let sq = d.to_table::<f64>().tensor_power(2, DEFAULT_TENSOR_CAP).unwrap();
        let dd = sq.to_deterministic().unwrap();
        assert_eq!(dd.input_size(), 9);
        for x in 0..3 {
            for xp in 0..3 {
                let (a, b) = d.pairs()[x];
                let (ap, bp) = d.pairs()[xp];
                assert_eq!(dd.pairs()[x * 3 + xp], (a * 2 + ap, b * 2 + bp));
            }
        }
    }

    #[test]
    fn tensor_square_entries_are_products() {
        let w = random_table(&[5, 8, 13, 21, 34, 55, 89, 144], 2, 2, 2);
        let sq = w.tensor_power(2, DEFAULT_TENSOR_CAP).unwrap();
        for x in 0..2 {
            for xp in 0..2 {
                for y1 in 0..2 {
                    for y1p in 0..2 {
                        for y2 in 0..2 {
                            for y2p in 0..2 {
                                let direct = w.get(x, y1, y2) * w.get(xp, y1p, y2p);
                                let got = sq.get(x * 2 + xp, y1 * 2 + y1p, y2 * 2 + y2p);
                                assert!((direct - got).abs() < 1e-15);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_power_cap() {
        let w = uniform_single();
        assert!(matches!(w.tensor_power(3, 10), Err(Error::SizeCapExceeded { requested: 64, cap: 10 })));
    }

    #[test]
    fn to_deterministic_rejects_half() {
        let w = ChannelTable::new(2, 2, 1, vec![1.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(w.to_deterministic().unwrap_err(), Error::NotDeterministic { x: 1 });
    }

    #[test]
    fn deterministic_round_trip() {
        let d = DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let back = d.to_table::<f64>().to_deterministic().unwrap();
        assert_eq!(back, d);
        let exact = d.to_table::<BigRational>().to_deterministic().unwrap();
        assert_eq!(exact, d);
    }

    #[test]
    fn complete_graph_from_perfect_channel() {
        let d = DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        let g = d.graph();
        assert_eq!(g.edge_count(), 4);
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let d = DeterministicChannel::new(1, 1, vec![(0, 0), (0, 0)]).unwrap();
        assert_eq!(d.graph().edge_count(), 1);
    }

    fn arb_channel() -> impl Strategy<Value = ChannelTable<f64>> {
        (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(nx, n1, n2)| {
            prop::collection::vec(0.0f64..1.0, nx * n1 * n2).prop_map(move |raw| {
                let w = n1 * n2;
                let mut probs = raw.clone();
                for chunk in probs.chunks_mut(w) {
                    chunk[0] += 1e-3;
                    let s: f64 = chunk.iter().sum();
                    chunk.iter_mut().for_each(|v| *v /= s);
                }
                ChannelTable::new(nx, n1, n2, probs).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn marginals_of_square_are_products_of_marginals(w in arb_channel()) {
            let sq = w.tensor_power(2, DEFAULT_TENSOR_CAP).unwrap();
            let (m1, m2) = w.marginals();
            let (s1, s2) = sq.marginals();
            let nx = w.input_size();
            for x in 0..nx { for xp in 0..nx {
                for a in 0..w.out1_size() { for b in 0..w.out1_size() {
                    let expect = m1.get(x, a) * m1.get(xp, b);
                    let got = s1.get(x * nx + xp, a * w.out1_size() + b);
                    prop_assert!((expect - got).abs() < 1e-12);
                }}
                for a in 0..w.out2_size() { for b in 0..w.out2_size() {
                    let expect = m2.get(x, a) * m2.get(xp, b);
                    let got = s2.get(x * nx + xp, a * w.out2_size() + b);
                    prop_assert!((expect - got).abs() < 1e-12);
                }}
            }}
        }

        #[test]
        fn graph_invariant_under_input_permutation(
            pairs in prop::collection::vec((0usize..3, 0usize..3), 1..7),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let d = DeterministicChannel::new(3, 3, pairs.clone()).unwrap();
            let mut shuffled = pairs;
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let e = DeterministicChannel::new(3, 3, shuffled).unwrap();
            prop_assert_eq!(d.graph(), e.graph());
        }

        #[test]
        fn validation_accepts_exactly_normalized_rows(
            raw in prop::collection::vec(-0.2f64..1.0, 4),
            scale in 0.9f64..1.1,
        ) {
            let total: f64 = raw.iter().map(|v| v.abs()).sum::<f64>() + 1e-3;
            let probs: Vec<f64> = raw.iter().map(|v| v / total * scale).collect();
            let s: f64 = probs.iter().sum();
            let ok = probs.iter().all(|v| *v >= 0.0) && (s - 1.0).abs() <= NORMALIZATION_TOL;
            prop_assert_eq!(ChannelTable::new(1, 2, 2, probs).is_ok(), ok);
        }
    }
}
