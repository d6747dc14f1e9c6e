//! Exhaustive solvers for the unassisted success probabilities, the densest
//! quotient graph, and the decoder-box value.
//!
//! Joint and sum values enumerate decoder pairs and pick the encoder cell by
//! cell, since the encoder enters each `(i1, i2)` cell independently. Ties
//! always go to the lexicographically smallest candidate, with `d1` more
//! significant than `d2`, so reports do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelTable, DeterministicChannel, MarginalTable};
use crate::error::{Error, Result};
use crate::graph::{
    assignment_count, check_cap, decode_assignment, next_assignment, quotient_edges_unchecked, BipartiteGraph,
    Partition,
};
use crate::lp::{build_decoder_box_lp, lp_solve, Objective};
use crate::scalar::Scalar;

/// Deterministic code: `encoder[i1 * k2 + i2] = x`, `decoder1[y1] = i1`,
/// `decoder2[y2] = i2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Code {
    pub k1: usize,
    pub k2: usize,
    pub encoder: Vec<usize>,
    pub decoder1: Vec<usize>,
    pub decoder2: Vec<usize>,
}

impl Code {
    pub fn new(k1: usize, k2: usize, encoder: Vec<usize>, decoder1: Vec<usize>, decoder2: Vec<usize>) -> Result<Self> {
        if k1 == 0 || k2 == 0 {
            return Err(Error::BadParameters("message counts must be at least 1".into()));
        }
        if encoder.len() != k1 * k2 {
            return Err(Error::DimensionMismatch(format!("encoder has {} cells, expected {}", encoder.len(), k1 * k2)));
        }
        if decoder1.iter().any(|&i| i >= k1) || decoder2.iter().any(|&i| i >= k2) {
            return Err(Error::DimensionMismatch("decoder output out of range".into()));
        }
        Ok(Code { k1, k2, encoder, decoder1, decoder2 })
    }

    pub fn encode(&self, i1: usize, i2: usize) -> usize {
        self.encoder[i1 * self.k2 + i2]
    }

    fn check<T: Scalar>(&self, w: &ChannelTable<T>) -> Result<()> {
        if self.decoder1.len() != w.out1_size() || self.decoder2.len() != w.out2_size() {
            return Err(Error::DimensionMismatch(format!(
                "decoders cover {}x{} outputs, channel has {}x{}",
                self.decoder1.len(),
                self.decoder2.len(),
                w.out1_size(),
                w.out2_size()
            )));
        }
        if let Some(&x) = self.encoder.iter().find(|&&x| x >= w.input_size()) {
            return Err(Error::DimensionMismatch(format!("encoder output {x} out of range")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Code(Code),
    Partitions { p1: Partition, p2: Partition },
    Encoder { k1: usize, k2: usize, encoder: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<V> {
    pub value: V,
    pub witness: Option<Witness>,
    /// Number of candidates examined.
    pub enumerated: u128,
}

fn check_messages(k1: usize, k2: usize) -> Result<()> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::BadParameters("message counts must be at least 1".into()));
    }
    Ok(())
}

/// Joint success probability of a deterministic code.
pub fn joint_success<T: Scalar>(w: &ChannelTable<T>, code: &Code) -> Result<T> {
    code.check(w)?;
    let mut total = T::zero();
    for (y1, &i1) in code.decoder1.iter().enumerate() {
        for (y2, &i2) in code.decoder2.iter().enumerate() {
            total = total + w.get(code.encode(i1, i2), y1, y2).clone();
        }
    }
    Ok(total / T::from_usize_exact(code.k1 * code.k2))
}

/// Sum success probability of a deterministic code.
pub fn sum_success<T: Scalar>(w: &ChannelTable<T>, code: &Code) -> Result<T> {
    code.check(w)?;
    let mut total = T::zero();
    for i1 in 0..code.k1 {
        for i2 in 0..code.k2 {
            let x = code.encode(i1, i2);
            for y1 in 0..w.out1_size() {
                for y2 in 0..w.out2_size() {
                    let hits = usize::from(code.decoder1[y1] == i1) + usize::from(code.decoder2[y2] == i2);
                    if hits > 0 {
                        total = total + w.get(x, y1, y2).clone() * T::from_usize_exact(hits);
                    }
                }
            }
        }
    }
    Ok(total / T::from_usize_exact(2 * code.k1 * code.k2))
}

/// Sum success probability computed from the two marginal channels only.
pub fn sum_success_marginal<T: Scalar>(w1: &MarginalTable<T>, w2: &MarginalTable<T>, code: &Code) -> Result<T> {
    if code.decoder1.len() != w1.out_size() || code.decoder2.len() != w2.out_size() {
        return Err(Error::DimensionMismatch("decoders do not match marginal alphabets".into()));
    }
    let mut total = T::zero();
    for i1 in 0..code.k1 {
        for i2 in 0..code.k2 {
            let x = code.encode(i1, i2);
            for (y1, &d) in code.decoder1.iter().enumerate() {
                if d == i1 {
                    total = total + w1.get(x, y1).clone();
                }
            }
            for (y2, &d) in code.decoder2.iter().enumerate() {
                if d == i2 {
                    total = total + w2.get(x, y2).clone();
                }
            }
        }
    }
    Ok(total / T::from_usize_exact(2 * code.k1 * code.k2))
}

/// Best candidate found by one worker: value, rank, and payload.
struct Best<V, P> {
    value: V,
    rank: u128,
    payload: P,
}

fn better<V: PartialOrd, P>(a: Option<Best<V, P>>, b: Option<Best<V, P>>) -> Option<Best<V, P>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.value > a.value || (!(a.value > b.value) && b.rank < a.rank) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

/// Shared decoder enumeration. `fill(d1, d2, cells)` writes the score of
/// every input `x` in cell `(i1, i2)` at `cells[(i1 * k2 + i2) * nx + x]`; the
/// best input per cell is taken, smallest `x` on ties.
fn solve_by_decoders<T, F>(w: &ChannelTable<T>, k1: usize, k2: usize, cap: u128, objective: F) -> Result<SolveReport<T>>
where
    T: Scalar,
    F: Fn(&[usize], &[usize], &mut Vec<T>) + Sync,
{
    check_messages(k1, k2)?;
    let (nx, n1, n2) = (w.input_size(), w.out1_size(), w.out2_size());
    let c1 = assignment_count(n1, k1);
    let c2 = assignment_count(n2, k2);
    let total = check_cap(c1.zip(c2).and_then(|(a, b)| a.checked_mul(b)), cap)?;
    let (c1, c2) = (c1.unwrap(), c2.unwrap());

    let best = (0..c1)
        .into_par_iter()
        .map(|r1| {
            let mut d1 = vec![0; n1];
            decode_assignment(r1, k1, &mut d1);
            let mut d2 = vec![0; n2];
            let mut cells = vec![T::zero(); k1 * k2 * nx];
            let mut best: Option<Best<T, (Vec<usize>, Vec<usize>, Vec<usize>)>> = None;
            let mut r2 = 0u128;
            loop {
                objective(&d1, &d2, &mut cells);
                let mut value = T::zero();
                let mut enc = vec![0; k1 * k2];
                for cell in 0..k1 * k2 {
                    let row = &cells[cell * nx..(cell + 1) * nx];
                    let mut bx = 0;
                    for x in 1..nx {
                        if row[x] > row[bx] {
                            bx = x;
                        }
                    }
                    enc[cell] = bx;
                    value = value + row[bx].clone();
                }
                let improves = match &best {
                    None => true,
                    Some(b) => value > b.value,
                };
                if improves {
                    best = Some(Best { value, rank: r1 * c2 + r2, payload: (enc, d1.clone(), d2.clone()) });
                }
                r2 += 1;
                if !next_assignment(&mut d2, k2) {
                    break;
                }
            }
            best
        })
        .reduce(|| None, better);

    let b = best.expect("at least one candidate");
    let (encoder, decoder1, decoder2) = b.payload;
    Ok(SolveReport {
        value: b.value,
        witness: Some(Witness::Code(Code { k1, k2, encoder, decoder1, decoder2 })),
        enumerated: total,
    })
}

/// Exact optimal joint success probability over deterministic codes.
pub fn solve_joint<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize, cap: u128) -> Result<SolveReport<T>> {
    let (nx, n1, n2) = (w.input_size(), w.out1_size(), w.out2_size());
    let norm = T::from_usize_exact(k1 * k2);
    let mut report = solve_by_decoders(w, k1, k2, cap, |d1, d2, cells| {
        cells.iter_mut().for_each(|c| *c = T::zero());
        for x in 0..nx {
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    let v = w.get(x, y1, y2);
                    if !v.is_zero() {
                        let idx = (d1[y1] * k2 + d2[y2]) * nx + x;
                        cells[idx] = cells[idx].clone() + v.clone();
                    }
                }
            }
        }
    })?;
    report.value = report.value / norm;
    Ok(report)
}

/// Exact optimal sum success probability over deterministic codes.
pub fn solve_sum<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize, cap: u128) -> Result<SolveReport<T>> {
    let (w1, w2) = w.marginals();
    let (nx, n1, n2) = (w.input_size(), w.out1_size(), w.out2_size());
    let norm = T::from_usize_exact(2 * k1 * k2);
    let mut report = solve_by_decoders(w, k1, k2, cap, |d1, d2, cells| {
        let mut a = vec![T::zero(); k1 * nx];
        let mut b = vec![T::zero(); k2 * nx];
        for x in 0..nx {
            for y1 in 0..n1 {
                let i = d1[y1] * nx + x;
                a[i] = a[i].clone() + w1.get(x, y1).clone();
            }
            for y2 in 0..n2 {
                let i = d2[y2] * nx + x;
                b[i] = b[i].clone() + w2.get(x, y2).clone();
            }
        }
        for i1 in 0..k1 {
            for i2 in 0..k2 {
                for x in 0..nx {
                    cells[(i1 * k2 + i2) * nx + x] = a[i1 * nx + x].clone() + b[i2 * nx + x].clone();
                }
            }
        }
    })?;
    report.value = report.value / norm;
    Ok(report)
}

/// Exact densest quotient graph value with witness partitions.
pub fn solve_dqg(g: &BipartiteGraph, k1: usize, k2: usize, cap: u128) -> Result<SolveReport<usize>> {
    check_messages(k1, k2)?;
    let (n1, n2) = (g.left_size(), g.right_size());
    let c1 = assignment_count(n1, k1);
    let c2 = assignment_count(n2, k2);
    let total = check_cap(c1.zip(c2).and_then(|(a, b)| a.checked_mul(b)), cap)?;
    let (c1, c2) = (c1.unwrap(), c2.unwrap());
    // No quotient can beat min(k1 k2, |E|); stop a worker early once reached.
    let ceiling = (k1 * k2).min(g.edge_count());

    let best = (0..c1)
        .into_par_iter()
        .map(|r1| {
            let mut a1 = vec![0; n1];
            decode_assignment(r1, k1, &mut a1);
            let mut a2 = vec![0; n2];
            let mut best: Option<Best<usize, (Vec<usize>, Vec<usize>)>> = None;
            let mut r2 = 0u128;
            loop {
                let v = quotient_edges_unchecked(g, &a1, k1, &a2, k2);
                if best.as_ref().map_or(true, |b| v > b.value) {
                    best = Some(Best { value: v, rank: r1 * c2 + r2, payload: (a1.clone(), a2.clone()) });
                    if v == ceiling {
                        break;
                    }
                }
                r2 += 1;
                if !next_assignment(&mut a2, k2) {
                    break;
                }
            }
            best
        })
        .reduce(|| None, better);

    let b = best.expect("at least one candidate");
    let (a1, a2) = b.payload;
    Ok(SolveReport {
        value: b.value,
        witness: Some(Witness::Partitions { p1: Partition::new(k1, a1)?, p2: Partition::new(k2, a2)? }),
        enumerated: total,
    })
}

/// Decoder-side non-signaling value: every deterministic encoder, each
/// followed by the decoder-box program.
///
/// For a fixed box the objective is linear in the encoder with a separate
/// simplex constraint per message pair, so the optimum over encoders is
/// attained at a deterministic one and the enumeration is exact.
pub fn solve_ns_dec<T: Scalar>(
    w: &ChannelTable<T>,
    k1: usize,
    k2: usize,
    objective: Objective,
    cap: u128,
) -> Result<SolveReport<T>> {
    check_messages(k1, k2)?;
    let nx = w.input_size();
    let total = check_cap(assignment_count(k1 * k2, nx), cap)?;
    let best = (0..total)
        .into_par_iter()
        .map(|rank| -> Result<Option<Best<T, Vec<usize>>>> {
            let mut enc = vec![0; k1 * k2];
            decode_assignment(rank, nx, &mut enc);
            let model = build_decoder_box_lp(w, &enc, k1, k2, objective)?;
            let sol = lp_solve(&model)?.require_optimal()?;
            Ok(Some(Best { value: sol.value, rank, payload: enc }))
        })
        .try_reduce(|| None, |a, b| Ok(better(a, b)))?;
    let b = best.expect("at least one encoder");
    Ok(SolveReport {
        value: b.value,
        witness: Some(Witness::Encoder { k1, k2, encoder: b.payload }),
        enumerated: total,
    })
}

/// Decoders of a code read as partitions of the two output alphabets.
pub fn code_partitions(code: &Code) -> Result<(Partition, Partition)> {
    Ok((Partition::new(code.k1, code.decoder1.clone())?, Partition::new(code.k2, code.decoder2.clone())?))
}

/// Turns a partition pair into a code: each cell `(i1, i2)` is sent the
/// smallest input whose output pair lands in parts `(i1, i2)`, or input 0
/// when the cell has no such input.
pub fn code_from_partitions(w: &DeterministicChannel, p1: &Partition, p2: &Partition) -> Result<Code> {
    if p1.ground_size() != w.out1_size() || p2.ground_size() != w.out2_size() {
        return Err(Error::SideMismatch { expected: w.out1_size(), got: p1.ground_size() });
    }
    let (k1, k2) = (p1.num_parts(), p2.num_parts());
    let mut encoder: Vec<Option<usize>> = vec![None; k1 * k2];
    for (x, &(y1, y2)) in w.pairs().iter().enumerate() {
        let cell = p1.part_of(y1) * k2 + p2.part_of(y2);
        if encoder[cell].is_none() {
            encoder[cell] = Some(x);
        }
    }
    Code::new(
        k1,
        k2,
        encoder.into_iter().map(|e| e.unwrap_or(0)).collect(),
        p1.assignment().to_vec(),
        p2.assignment().to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{quotient_edge_count, DEFAULT_ENUMERATION_CAP as CAP};
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn perfect() -> DeterministicChannel {
        DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
    }

    fn one_input() -> ChannelTable<f64> {
        ChannelTable::new(1, 2, 2, vec![0.25; 4]).unwrap()
    }

    #[test]
    fn perfect_channel_identity_code() {
        let w = perfect().to_table::<f64>();
        let code = Code::new(2, 2, vec![0, 1, 2, 3], vec![0, 1], vec![0, 1]).unwrap();
        assert_eq!(joint_success(&w, &code).unwrap(), 1.0);
        assert_eq!(sum_success(&w, &code).unwrap(), 1.0);
        assert_eq!(solve_joint(&w, 2, 2, CAP).unwrap().value, 1.0);
        assert_eq!(solve_sum(&w, 2, 2, CAP).unwrap().value, 1.0);
    }

    #[test]
    fn one_input_values() {
        let w = one_input();
        let code = Code::new(2, 2, vec![0; 4], vec![0, 1], vec![1, 1]).unwrap();
        assert!((joint_success(&w, &code).unwrap() - 0.25).abs() < 1e-15);
        assert!((solve_joint(&w, 2, 2, CAP).unwrap().value - 0.25).abs() < 1e-15);
        // Always guessing (0, 0): each receiver is right for half of the messages.
        let guess = Code::new(2, 2, vec![0; 4], vec![0, 0], vec![0, 0]).unwrap();
        assert!((sum_success(&w, &guess).unwrap() - 0.5).abs() < 1e-15);
        assert!((solve_sum(&w, 2, 2, CAP).unwrap().value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_dqg() {
        let w = perfect();
        assert_eq!(solve_dqg(&w.graph(), 2, 2, CAP).unwrap().value, 4);
        let star = BipartiteGraph::from_edges(1, 3, [(0, 0), (0, 1), (0, 2)]).unwrap();
        let r = solve_dqg(&star, 2, 3, CAP).unwrap();
        assert_eq!(r.value, 3);
        if let Some(Witness::Partitions { p1, p2 }) = r.witness {
            assert_eq!(quotient_edge_count(&star, &p1, &p2).unwrap(), 3);
        } else {
            panic!("missing witness");
        }
    }

    #[test]
    fn witness_reproduces_value() {
        let w: ChannelTable<f64> =
            ChannelTable::new(3, 2, 2, vec![0.5, 0.1, 0.2, 0.2, 0.05, 0.15, 0.3, 0.5, 0.25, 0.25, 0.25, 0.25]).unwrap();
        let joint = solve_joint(&w, 2, 2, CAP).unwrap();
        let Some(Witness::Code(code)) = &joint.witness else { panic!() };
        assert!((joint_success(&w, code).unwrap() - joint.value).abs() < 1e-15);
        let sum = solve_sum(&w, 2, 2, CAP).unwrap();
        let Some(Witness::Code(code)) = &sum.witness else { panic!() };
        assert!((sum_success(&w, code).unwrap() - sum.value).abs() < 1e-15);
        let (w1, w2) = w.marginals();
        assert!((sum_success_marginal(&w1, &w2, code).unwrap() - sum.value).abs() < 1e-15);
        assert!(joint.value <= sum.value + 1e-15);
    }

    #[test]
    fn ns_dec_one_input_and_sum() {
        let w = one_input();
        let j = solve_ns_dec(&w, 2, 2, Objective::Joint, CAP).unwrap();
        assert!((j.value - 0.25).abs() < 1e-9);
        let s = solve_ns_dec(&w, 2, 2, Objective::Sum, CAP).unwrap();
        assert!((s.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn partitions_code_roundtrip() {
        let w = DeterministicChannel::new(2, 3, vec![(0, 0), (1, 2), (1, 1), (0, 2)]).unwrap();
        let p1 = Partition::new(2, vec![0, 1]).unwrap();
        let p2 = Partition::new(2, vec![0, 1, 1]).unwrap();
        let code = code_from_partitions(&w, &p1, &p2).unwrap();
        assert_eq!(code.encoder, vec![0, 3, 0, 1]);
        let edges = quotient_edge_count(&w.graph(), &p1, &p2).unwrap();
        let s = joint_success(&w.to_table::<BigRational>(), &code).unwrap();
        assert_eq!(s * ratio(4, 1), ratio(edges as i64, 1));
        let (q1, q2) = code_partitions(&code).unwrap();
        assert_eq!((q1, q2), (p1, p2));
    }

    #[test]
    fn caps_are_enforced() {
        let w = one_input();
        assert!(matches!(solve_joint(&w, 2, 2, 3), Err(Error::EnumerationCapExceeded { .. })));
        assert!(matches!(solve_ns_dec(&w, 2, 2, Objective::Joint, 0), Err(Error::EnumerationCapExceeded { .. })));
    }

    #[test]
    fn rational_solvers() {
        let q = |n| ratio(n, 10);
        let w: ChannelTable<BigRational> =
            ChannelTable::new(2, 2, 2, vec![q(5), q(1), q(2), q(2), q(0), q(3), q(3), q(4)]).unwrap();
        let j = solve_joint(&w, 2, 2, CAP).unwrap().value;
        let s = solve_sum(&w, 2, 2, CAP).unwrap().value;
        let ns = solve_ns_dec(&w, 2, 2, Objective::Sum, CAP).unwrap().value;
        assert_eq!(s, ns);
        assert!(j <= s);
    }
}
