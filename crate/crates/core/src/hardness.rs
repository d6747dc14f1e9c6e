//! Value-query hardness instances.
//!
//! With `m = k1²` items and `n = m + k1 + 1`, the column `y2 = 0` of `W` is
//! `C` times
//!
//! * `a · 1[y1 = x]` for `x < m`, with `a = m^{2δ}`,
//! * `b` for `x = m`, with `b = m^{δ − 1/2}`,
//! * `1[y1 ∈ T_j]` for `x = m + 1 + j`,
//!
//! and column `y2` is column 0 with inputs rotated: `W(y1, y2 | x) =
//! W(y1, 0 | (x + y2) mod n)`. The alternate channel `W'` replaces the block
//! indicator by `1/√m = 1/k1`. Indices are 0-based; the rotation is the
//! 0-based form of the translation `t_s`.
//!
//! The normalized value of a set of items is
//! `v(S) = max(a·[S ≠ ∅], b|S|, max_j |T_j ∩ S|)`, and `v'` drops the last term.

use std::collections::BinaryHeap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::channel::ChannelTable;
use crate::error::{Error, Result};
use crate::graph::{assignment_count, check_cap, next_assignment};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    /// The planted channel `W`.
    Planted,
    /// The alternate channel `W'` without planted blocks.
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessInstance {
    pub k1: usize,
    pub m: usize,
    pub delta: f64,
    /// `T_1 .. T_k1`, each sorted ascending.
    pub blocks: Vec<Vec<usize>>,
    /// `block_of[i] = j` iff `i ∈ T_j`.
    pub block_of: Vec<usize>,
    pub c: f64,
    pub seed: u64,
}

/// Uniform equipartition of `[k²]` into `k` blocks of size `k`.
pub fn sample_equipartition<R: rand::Rng>(k: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..k * k).collect();
    items.shuffle(rng);
    items
        .chunks(k)
        .map(|c| {
            let mut b = c.to_vec();
            b.sort_unstable();
            b
        })
        .collect()
}

pub fn build_instance(k1: usize, delta: f64, seed: u64) -> Result<HardnessInstance> {
    if k1 < 2 {
        return Err(Error::BadParameters(format!("k1 must be at least 2, got {k1}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::BadParameters(format!("delta must be positive and finite, got {delta}")));
    }
    let m = k1 * k1;
    let blocks = sample_equipartition(k1, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut block_of = vec![0; m];
    for (j, b) in blocks.iter().enumerate() {
        for &i in b {
            block_of[i] = j;
        }
    }
    let mf = m as f64;
    let c = 1.0 / (mf.powf(1.0 + 2.0 * delta) + mf.powf(0.5 + delta) + mf);
    Ok(HardnessInstance { k1, m, delta, blocks, block_of, c, seed })
}

impl HardnessInstance {
    /// Singleton weight `m^{2δ}`.
    pub fn a(&self) -> f64 {
        (self.m as f64).powf(2.0 * self.delta)
    }

    /// Per-item weight of the spread input, `m^{δ − 1/2}`.
    pub fn b(&self) -> f64 {
        (self.m as f64).powf(self.delta - 0.5)
    }

    /// Size of the input alphabet and of `Y2`.
    pub fn n(&self) -> usize {
        self.m + self.k1 + 1
    }

    /// Normalization constant recomputed in `T` from the same `a`, `b` used
    /// by [`materialize_channel`], so rational rows sum to exactly one.
    pub fn c_in<T: Scalar>(&self) -> T {
        let (a, b) = (T::from_f64_value(self.a()), T::from_f64_value(self.b()));
        T::one() / (T::from_usize_exact(self.m) * (a + b + T::one()))
    }

    /// `p_leak = m^{1/2} e^{−m^{3δ}/4}`.
    pub fn p_leak(&self) -> f64 {
        p_leak(self.m, self.delta)
    }
}

pub fn p_leak(m: usize, delta: f64) -> f64 {
    let mf = m as f64;
    mf.sqrt() * (-mf.powf(3.0 * delta) / 4.0).exp()
}

/// Full channel table; `(m + k1 + 1)² · m` entries.
pub fn materialize_channel<T: Scalar>(inst: &HardnessInstance, which: Which, cap: u128) -> Result<ChannelTable<T>> {
    let (m, n, k1) = (inst.m, inst.n(), inst.k1);
    let size = (n as u128) * (n as u128) * (m as u128);
    if size > cap {
        return Err(Error::SizeCapExceeded { requested: size, cap });
    }
    let c = inst.c_in::<T>();
    let a = T::from_f64_value(inst.a()) * c.clone();
    let b = T::from_f64_value(inst.b()) * c.clone();
    let spread = c.clone() / T::from_usize_exact(k1);
    let base = |y1: usize, x: usize| -> T {
        if x < m {
            if y1 == x {
                a.clone()
            } else {
                T::zero()
            }
        } else if x == m {
            b.clone()
        } else {
            match which {
                Which::Planted if inst.block_of[y1] == x - m - 1 => c.clone(),
                Which::Planted => T::zero(),
                Which::Alternate => spread.clone(),
            }
        }
    };
    let mut probs = Vec::with_capacity(size as usize);
    for x in 0..n {
        for y1 in 0..m {
            for y2 in 0..n {
                probs.push(base(y1, (x + y2) % n));
            }
        }
    }
    ChannelTable::new(n, m, n, probs)
}

fn check_subset(m: usize, subset: &[usize]) -> Result<()> {
    if let Some(&i) = subset.iter().find(|&&i| i >= m) {
        return Err(Error::BadParameters(format!("item {i} out of range for {m} items")));
    }
    let mut seen = vec![false; m];
    for &i in subset {
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadParameters(format!("item {i} repeated")));
        }
    }
    Ok(())
}

/// Largest block intersection `max_j |T_j ∩ S|`.
pub fn max_block_overlap(inst: &HardnessInstance, subset: &[usize]) -> usize {
    let mut counts = vec![0usize; inst.k1];
    for &i in subset {
        counts[inst.block_of[i]] += 1;
    }
    counts.into_iter().max().unwrap_or(0)
}

/// Normalized value `v` (planted) or `v'` (alternate) in `O(|S| + k1)`.
pub fn value_oracle(inst: &HardnessInstance, which: Which, subset: &[usize]) -> Result<f64> {
    value_oracle_in::<f64>(inst, which, subset)
}

/// [`value_oracle`] evaluated in `T`, with `a` and `b` converted from their
/// `f64` values exactly as in [`materialize_channel`].
pub fn value_oracle_in<T: Scalar>(inst: &HardnessInstance, which: Which, subset: &[usize]) -> Result<T> {
    check_subset(inst.m, subset)?;
    if subset.is_empty() {
        return Ok(T::zero());
    }
    let a = T::from_f64_value(inst.a());
    let spread = T::from_f64_value(inst.b()) * T::from_usize_exact(subset.len());
    let v = T::max_of(a, spread);
    Ok(match which {
        Which::Planted => T::max_of(v, T::from_usize_exact(max_block_overlap(inst, subset))),
        Which::Alternate => v,
    })
}

/// `f¹_W(S) = (1/|Y2|) Σ_{y2} max_x Σ_{y1 ∈ S} W(y1 y2 | x)`, from the table.
pub fn f1_value<T: Scalar>(w: &ChannelTable<T>, subset: &[usize]) -> Result<T> {
    check_subset(w.out1_size(), subset)?;
    let mut total = T::zero();
    for y2 in 0..w.out2_size() {
        let mut best = T::zero();
        for x in 0..w.input_size() {
            let s = subset.iter().fold(T::zero(), |acc, &y1| acc + w.get(x, y1, y2).clone());
            best = T::max_of(best, s);
        }
        total = total + best;
    }
    Ok(total / T::from_usize_exact(w.out2_size()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WelfareMode {
    /// Planted: `m`, the welfare of `T_1 .. T_k1`. Alternate:
    /// `(k1 − 1)a + max(a, b(m − k1 + 1))`, from `k1 − 1` singletons plus
    /// one bundle holding the rest.
    ClosedForm,
    /// Maximum over all `k1^m` assignments of items to bidders.
    Exhaustive { cap: u128 },
}

/// Social welfare of `k1` bidders sharing the normalized utility.
pub fn optimal_welfare(inst: &HardnessInstance, which: Which, mode: WelfareMode) -> Result<f64> {
    let (k1, m) = (inst.k1, inst.m);
    match mode {
        WelfareMode::ClosedForm => Ok(match which {
            Which::Planted => m as f64,
            Which::Alternate => (k1 - 1) as f64 * inst.a() + inst.a().max(inst.b() * (m - k1 + 1) as f64),
        }),
        WelfareMode::Exhaustive { cap } => {
            check_cap(assignment_count(m, k1), cap)?;
            let mut assign = vec![0; m];
            let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); k1];
            let mut best = f64::NEG_INFINITY;
            loop {
                bundles.iter_mut().for_each(Vec::clear);
                for (i, &b) in assign.iter().enumerate() {
                    bundles[b].push(i);
                }
                let mut total = 0.0;
                for bundle in &bundles {
                    total += value_oracle(inst, which, bundle)?;
                }
                best = best.max(total);
                if !next_assignment(&mut assign, k1) {
                    break;
                }
            }
            Ok(best)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLog {
    pub strategy: String,
    pub queries: Vec<QueryRecord>,
    /// First query whose planted answer differs from the alternate one.
    pub distinguished_at: Option<usize>,
}

impl QueryLog {
    /// One JSON object per query.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            index: usize,
            strategy: &'a str,
            subset: &'a [usize],
            value: f64,
            distinguishing: bool,
        }
        for (index, q) in self.queries.iter().enumerate() {
            let line = Line {
                index,
                strategy: &self.strategy,
                subset: &q.subset,
                value: q.value,
                distinguishing: self.distinguished_at == Some(index),
            };
            let text = serde_json::to_string(&line).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
        Ok(())
    }
}

/// A query stream that sees only its own past queries and answers.
pub trait Strategy {
    fn name(&self) -> String;
    fn next_query(&mut self, m: usize, history: &[QueryRecord]) -> Option<Vec<usize>>;
}

/// Queries `{0}, {1}, …, {m − 1}` and stops.
#[derive(Debug, Clone, Default)]
pub struct Singletons {
    next: usize,
}

impl Strategy for Singletons {
    fn name(&self) -> String {
        "singletons".into()
    }

    fn next_query(&mut self, m: usize, _: &[QueryRecord]) -> Option<Vec<usize>> {
        let i = self.next;
        self.next += 1;
        (i < m).then(|| vec![i])
    }
}

/// Uniform random subsets of a fixed size, seeded.
#[derive(Debug, Clone)]
pub struct RandomFixedSize {
    size: usize,
    rng: ChaCha8Rng,
}

impl RandomFixedSize {
    pub fn new(size: usize, seed: u64) -> Self {
        RandomFixedSize { size, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Strategy for RandomFixedSize {
    fn name(&self) -> String {
        format!("random-{}", self.size)
    }

    fn next_query(&mut self, m: usize, _: &[QueryRecord]) -> Option<Vec<usize>> {
        let mut s = rand::seq::index::sample(&mut self.rng, m, self.size.min(m)).into_vec();
        s.sort_unstable();
        Some(s)
    }
}

/// Halves a seeded random ordering of the items, always splitting next the
/// pending set whose parent scored highest relative to its size.
#[derive(Debug, Clone)]
pub struct AdaptiveBisection {
    seed: u64,
    /// `(score, tiebreak, subset)`; score is parent value per item, scaled.
    frontier: BinaryHeap<(u64, std::cmp::Reverse<u64>, Vec<usize>)>,
    counter: u64,
    started: bool,
    pending: Option<Vec<usize>>,
}

impl AdaptiveBisection {
    pub fn new(seed: u64) -> Self {
        AdaptiveBisection { seed, frontier: BinaryHeap::new(), counter: 0, started: false, pending: None }
    }

    fn push(&mut self, score: f64, subset: Vec<usize>) {
        self.counter += 1;
        let key = (score.max(0.0) * 1e9) as u64;
        self.frontier.push((key, std::cmp::Reverse(self.counter), subset));
    }
}

impl Strategy for AdaptiveBisection {
    fn name(&self) -> String {
        "bisection".into()
    }

    fn next_query(&mut self, m: usize, history: &[QueryRecord]) -> Option<Vec<usize>> {
        if !self.started {
            self.started = true;
            let mut items: Vec<usize> = (0..m).collect();
            items.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
            self.push(0.0, items);
        }
        if let (Some(parent), Some(last)) = (self.pending.take(), history.last()) {
            if parent.len() > 1 {
                let score = last.value / parent.len() as f64;
                let (lo, hi) = parent.split_at(parent.len() / 2);
                self.push(score, lo.to_vec());
                self.push(score, hi.to_vec());
            }
        }
        let (_, _, subset) = self.frontier.pop()?;
        let mut query = subset.clone();
        query.sort_unstable();
        self.pending = Some(subset);
        Some(query)
    }
}

/// A fixed list of subsets, queried in order.
#[derive(Debug, Clone)]
pub struct FixedList {
    label: String,
    queries: std::vec::IntoIter<Vec<usize>>,
}

impl FixedList {
    pub fn new(label: impl Into<String>, queries: Vec<Vec<usize>>) -> Self {
        FixedList { label: label.into(), queries: queries.into_iter() }
    }
}

impl Strategy for FixedList {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn next_query(&mut self, _: usize, _: &[QueryRecord]) -> Option<Vec<usize>> {
        self.queries.next()
    }
}

/// Answers queries with `v` until one differs from `v'` or the budget runs out.
pub fn run_query_experiment(inst: &HardnessInstance, strategy: &mut dyn Strategy, budget: usize) -> Result<QueryLog> {
    let mut log = QueryLog { strategy: strategy.name(), queries: Vec::new(), distinguished_at: None };
    while log.queries.len() < budget {
        let Some(subset) = strategy.next_query(inst.m, &log.queries) else { break };
        let v = value_oracle(inst, Which::Planted, &subset)?;
        let v_alt = value_oracle(inst, Which::Alternate, &subset)?;
        log.queries.push(QueryRecord { subset, value: v });
        if v != v_alt {
            log.distinguished_at = Some(log.queries.len() - 1);
            break;
        }
    }
    Ok(log)
}

/// Tail bound `e^{−p n ε² / 4}` for a mean of `n` negatively associated
/// Bernoulli(`p`) variables exceeding `(1 + ε)p`.
pub fn chernoff_bound(p: f64, n: usize, eps: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::BadParameters(format!("p must lie in (0, 1], got {p}")));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::BadParameters(format!("eps must lie in (0, 1/2], got {eps}")));
    }
    Ok((-p * n as f64 * eps * eps / 4.0).exp())
}

/// `1 − k^k e^{−k} / k!`, evaluated in log space.
pub fn poisson_concavity_ratio(k1: usize) -> Result<f64> {
    if k1 == 0 {
        return Err(Error::BadParameters("k1 must be at least 1".into()));
    }
    let k = k1 as f64;
    Ok(1.0 - (k * k.ln() - k - ln_gamma(k + 1.0)).exp())
}

/// `E[min(k, Poi(x))]`, summed exactly over the first `k` atoms.
pub fn poisson_min_expectation(k: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut pmf = (-x).exp();
    let mut below = 0.0;
    let mut mean_below = 0.0;
    for j in 0..k {
        below += pmf;
        mean_below += j as f64 * pmf;
        pmf *= x / (j + 1) as f64;
    }
    mean_below + k as f64 * (1.0 - below).max(0.0)
}
