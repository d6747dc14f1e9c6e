//! Approximation pipeline for the densest quotient graph.
//!
//! The right partition comes from lazy greedy on the welfare instance where
//! every bidder has utility `h(S) = min(k1, |N(S)|)`, restarted over random
//! item orders. The left partition is the better of a derandomized draw and
//! independent uniform draws.
//!
//! Sample `i` (0-based) uses a ChaCha8 generator seeded with the master seed
//! on stream `i + 1`; stream 0 drives the greedy restarts. Results therefore
//! do not depend on how samples are scheduled across threads.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::DeterministicChannel;
use crate::error::{Error, Result};
use crate::exact::{code_from_partitions, Code};
use crate::graph::{distinct_left_neighbors, quotient_edge_count, right_part_degrees, BipartiteGraph, Partition};

pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub p1: Partition,
    pub p2: Partition,
    pub value: usize,
    pub upper_bound: usize,
    /// `value / upper_bound`, or 1 when the bound is 0.
    pub ratio_certificate: f64,
    pub rng_seed: u64,
    pub samples_used: usize,
    /// Welfare `Σ min(k1, deg)` of the chosen right partition.
    pub welfare: usize,
    /// Closed-form expectation of a uniform left partition against `p2`.
    pub expected_edges: f64,
    pub derandomized_value: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareInstance {
    pub graph: BipartiteGraph,
    pub k1: usize,
    pub k2: usize,
}

impl WelfareInstance {
    pub fn new(graph: BipartiteGraph, k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::BadParameters("k1 and k2 must be at least 1".into()));
        }
        Ok(WelfareInstance { graph, k1, k2 })
    }

    /// Common utility `min(k1, |N(S)|)`.
    pub fn utility(&self, items: &[usize]) -> usize {
        self.k1.min(distinct_left_neighbors(&self.graph, items))
    }

    /// Summed utility of the bundles of `p2`.
    pub fn welfare(&self, p2: &Partition) -> Result<usize> {
        upper_bound_right(&self.graph, self.k1, p2)
    }
}

/// `Σ_{i2} min(k1, deg(P2^{i2}))`: the best quotient edge count any left
/// partition into `k1` parts can reach against `p2`.
pub fn upper_bound_right(g: &BipartiteGraph, k1: usize, p2: &Partition) -> Result<usize> {
    Ok(right_part_degrees(g, p2)?.into_iter().map(|d| d.min(k1)).sum())
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent uniform assignment of the left vertices to `parts` parts.
pub fn random_left_partition(g: &BipartiteGraph, parts: usize, seed: u64) -> Result<Partition> {
    random_left_with(g, parts, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_left_with<R: Rng>(g: &BipartiteGraph, parts: usize, rng: &mut R) -> Result<Partition> {
    if parts == 0 {
        return Err(Error::BadParameters("a partition needs at least one part".into()));
    }
    Partition::new(parts, (0..g.left_size()).map(|_| rng.gen_range(0..parts)).collect())
}

fn hit_probability(parts: usize, degree: usize) -> f64 {
    1.0 - (1.0 - 1.0 / parts as f64).powi(degree as i32)
}

/// Expected quotient edge count of a uniform left partition into `l1` parts:
/// `l1 · Σ_{i2} (1 − (1 − 1/l1)^{deg(P2^{i2})})`.
pub fn exact_expected_edges(g: &BipartiteGraph, l1: usize, p2: &Partition) -> Result<f64> {
    if l1 == 0 {
        return Err(Error::BadParameters("l1 must be at least 1".into()));
    }
    Ok(right_part_degrees(g, p2)?.into_iter().map(|d| l1 as f64 * hit_probability(l1, d)).sum())
}

/// Method of conditional expectations on the closed-form expectation.
///
/// Left vertices are fixed in index order. For a right part with hit set `A`
/// and `u` still-unassigned left neighbours, the conditional expectation of
/// its quotient degree is `|A| + (l1 − |A|)(1 − (1 − 1/l1)^u)`. Each vertex
/// goes to the part with the largest resulting total, lowest part on ties.
pub fn derandomize_left(g: &BipartiteGraph, l1: usize, p2: &Partition) -> Result<Partition> {
    if l1 == 0 {
        return Err(Error::BadParameters("l1 must be at least 1".into()));
    }
    if p2.ground_size() != g.right_size() {
        return Err(Error::SideMismatch { expected: g.right_size(), got: p2.ground_size() });
    }
    let k2 = p2.num_parts();
    let q = 1.0 - 1.0 / l1 as f64;
    let expect = |hit: usize, u: usize| hit as f64 + (l1 - hit) as f64 * (1.0 - q.powi(u as i32));

    // Right parts adjacent to each left vertex, deduplicated.
    let touched: Vec<Vec<usize>> = (0..g.left_size())
        .map(|v| {
            let mut parts: Vec<usize> = g.left_neighbors(v).iter().map(|&b| p2.part_of(b)).collect();
            parts.sort_unstable();
            parts.dedup();
            parts
        })
        .collect();
    let mut unassigned = vec![0usize; k2];
    for parts in &touched {
        for &p in parts {
            unassigned[p] += 1;
        }
    }
    let mut hit = vec![vec![false; l1]; k2];
    let mut hit_count = vec![0usize; k2];
    let mut assignment = vec![0; g.left_size()];

    for v in 0..g.left_size() {
        let parts = &touched[v];
        if parts.is_empty() {
            continue;
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for c in 0..l1 {
            // Only the touched right parts change; compare their contributions.
            let gain: f64 = parts
                .iter()
                .map(|&p| {
                    let h = hit_count[p] + usize::from(!hit[p][c]);
                    expect(h, unassigned[p] - 1)
                })
                .sum();
            if gain > best.0 {
                best = (gain, c);
            }
        }
        let c = best.1;
        assignment[v] = c;
        for &p in parts {
            unassigned[p] -= 1;
            if !hit[p][c] {
                hit[p][c] = true;
                hit_count[p] += 1;
            }
        }
    }
    Partition::new(l1, assignment)
}

/// Lazy greedy welfare with ties to the lowest bidder, then the lowest item.
pub fn greedy_welfare(inst: &WelfareInstance) -> Result<Partition> {
    let order: Vec<usize> = (0..inst.graph.right_size()).collect();
    greedy_welfare_ordered(inst, &order)
}

/// Lazy greedy where item ties are broken by position in `order` (a
/// permutation of the right vertices).
pub fn greedy_welfare_ordered(inst: &WelfareInstance, order: &[usize]) -> Result<Partition> {
    let g = &inst.graph;
    let n = g.right_size();
    if order.len() != n {
        return Err(Error::DimensionMismatch(format!("order has {} items, expected {n}", order.len())));
    }
    let (k1, k2) = (inst.k1, inst.k2);
    let mut covered = vec![vec![false; g.left_size()]; k2];
    let mut covered_count = vec![0usize; k2];
    let mut version = vec![0usize; k2];
    let mut assignment = vec![usize::MAX; n];

    let gain = |covered: &[bool], count: usize, item: usize| -> usize {
        if count >= k1 {
            return 0;
        }
        let fresh = g.right_neighbors(item).iter().filter(|&&u| !covered[u]).count();
        (count + fresh).min(k1) - count
    };

    // Heap key: gain, then lowest bidder, then earliest position.
    let mut heap: BinaryHeap<(usize, Reverse<usize>, Reverse<usize>, usize)> = BinaryHeap::new();
    for b in 0..k2 {
        for (pos, &item) in order.iter().enumerate() {
            heap.push((gain(&covered[b], 0, item), Reverse(b), Reverse(pos), 0));
        }
    }
    let mut remaining = n;
    while remaining > 0 {
        let (g_old, Reverse(b), Reverse(pos), ver) = heap.pop().expect("heap holds every unassigned item");
        let item = order[pos];
        if assignment[item] != usize::MAX {
            continue;
        }
        if ver != version[b] {
            let fresh = gain(&covered[b], covered_count[b], item);
            debug_assert!(fresh <= g_old);
            heap.push((fresh, Reverse(b), Reverse(pos), version[b]));
            continue;
        }
        assignment[item] = b;
        remaining -= 1;
        for &u in g.right_neighbors(item) {
            if !covered[b][u] {
                covered[b][u] = true;
                covered_count[b] += 1;
            }
        }
        version[b] += 1;
    }
    Partition::new(k2, assignment)
}

fn singletons_padded(n: usize, parts: usize) -> Partition {
    Partition::new(parts.max(1), (0..n).collect()).expect("parts >= n")
}

/// Greedy right partition with `restarts` extra random item orders; the
/// identity order is always tried first and wins ties.
pub fn best_right_partition(inst: &WelfareInstance, seed: u64, restarts: usize) -> Result<(Partition, usize)> {
    let n = inst.graph.right_size();
    if inst.k2 >= n {
        let p2 = singletons_padded(n, inst.k2);
        let w = inst.welfare(&p2)?;
        return Ok((p2, w));
    }
    let mut best = greedy_welfare(inst)?;
    let mut best_w = inst.welfare(&best)?;
    let mut rng = sample_rng(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..restarts {
        order.shuffle(&mut rng);
        let p2 = greedy_welfare_ordered(inst, &order)?;
        let w = inst.welfare(&p2)?;
        if w > best_w {
            best = p2;
            best_w = w;
        }
    }
    Ok((best, best_w))
}

/// Certified upper bound on the densest quotient value: the smallest of
/// `k1 k2`, `|E|`, both capped-degree sums, and twice the greedy welfare
/// (greedy is a ½-approximation of the welfare optimum, which dominates the
/// quotient optimum).
pub fn dqg_upper_bound(g: &BipartiteGraph, k1: usize, k2: usize, greedy_welfare: usize) -> usize {
    let right: usize = (0..g.right_size()).map(|v| g.right_degree(v).min(k1)).sum();
    let left: usize = (0..g.left_size()).map(|v| g.left_degree(v).min(k2)).sum();
    [k1 * k2, g.edge_count(), right, left, 2 * greedy_welfare].into_iter().min().unwrap()
}

pub fn approximate_dqg(
    g: &BipartiteGraph,
    k1: usize,
    k2: usize,
    seed: u64,
    num_samples: usize,
) -> Result<ApproxResult> {
    let inst = WelfareInstance::new(g.clone(), k1, k2)?;
    let (p2, welfare) = best_right_partition(&inst, seed, DEFAULT_RESTARTS)?;
    let expected_edges = exact_expected_edges(g, k1, &p2)?;

    let (p1, value, derandomized_value, samples_used) = if k1 >= g.left_size() {
        let p1 = singletons_padded(g.left_size(), k1);
        let v = quotient_edge_count(g, &p1, &p2)?;
        (p1, v, v, 0)
    } else {
        let derand = derandomize_left(g, k1, &p2)?;
        let dv = quotient_edge_count(g, &derand, &p2)?;
        let sampled = (0..num_samples)
            .into_par_iter()
            .map(|i| -> Result<(usize, usize, Partition)> {
                let p1 = random_left_with(g, k1, &mut sample_rng(seed, i as u64 + 1))?;
                Ok((quotient_edge_count(g, &p1, &p2)?, i + 1, p1))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = (dv, 0, derand);
        for cand in sampled {
            if cand.0 > best.0 {
                best = cand;
            }
        }
        (best.2, best.0, dv, num_samples)
    };
    let upper_bound = dqg_upper_bound(g, k1, k2, welfare);
    if value > upper_bound {
        return Err(Error::InvariantViolation(format!("value {value} above certified bound {upper_bound}")));
    }
    let ratio_certificate = if upper_bound == 0 { 1.0 } else { value as f64 / upper_bound as f64 };
    Ok(ApproxResult {
        p1,
        p2,
        value,
        upper_bound,
        ratio_certificate,
        rng_seed: seed,
        samples_used,
        welfare,
        expected_edges,
        derandomized_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetBccApprox {
    pub code: Code,
    /// Quotient edges divided by `k1 k2`.
    pub success: f64,
    pub result: ApproxResult,
}

/// Runs [`approximate_dqg`] on the channel graph and converts the partitions
/// back into a code.
pub fn approximate_detbcc(
    w: &DeterministicChannel,
    k1: usize,
    k2: usize,
    seed: u64,
    samples: usize,
) -> Result<DetBccApprox> {
    let result = approximate_dqg(&w.graph(), k1, k2, seed, samples)?;
    let code = code_from_partitions(w, &result.p1, &result.p2)?;
    Ok(DetBccApprox { code, success: result.value as f64 / (k1 * k2) as f64, result })
}
