//! Non-signaling linear programs.
//!
//! * the compact programs over `(p, r, r1, r2)` for the three-party box,
//! * the full program over `P(x j1 j2 | i1 i2 y1 y2)`,
//! * the decoder-only box program for a fixed deterministic encoder.

use crate::channel::ChannelTable;
use crate::error::{Error, Result};
use crate::lp::model::{LpModel, Relation};
use crate::lp::simplex::LpSolution;
use crate::scalar::Scalar;

/// Cap on the number of variables of the full three-party program.
pub const DEFAULT_FULL_NS_CAP: u128 = 20_000;

/// Tolerance used when re-checking typed solution invariants.
pub const NS_INVARIANT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Joint,
    Sum,
}

/// Variable layout of the compact program: `p` block, then `r`, `r1`, `r2`,
/// each in row-major index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NsLayout {
    pub inputs: usize,
    pub out1: usize,
    pub out2: usize,
}

impl NsLayout {
    pub fn of<T: Scalar>(w: &ChannelTable<T>) -> Self {
        NsLayout { inputs: w.input_size(), out1: w.out1_size(), out2: w.out2_size() }
    }

    pub fn p(&self, x: usize) -> usize {
        x
    }

    pub fn r(&self, x: usize, y1: usize, y2: usize) -> usize {
        self.inputs + (x * self.out1 + y1) * self.out2 + y2
    }

    pub fn r1(&self, x: usize, y1: usize) -> usize {
        self.inputs * (1 + self.out1 * self.out2) + x * self.out1 + y1
    }

    pub fn r2(&self, x: usize, y2: usize) -> usize {
        self.inputs * (1 + self.out1 * self.out2 + self.out1) + x * self.out2 + y2
    }

    pub fn num_vars(&self) -> usize {
        self.inputs * (1 + self.out1 * self.out2 + self.out1 + self.out2)
    }
}

fn scaled<T: Scalar>(den: usize) -> T {
    T::one() / T::from_usize_exact(den)
}

fn compact_constraints<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize) -> Result<LpModel<T>> {
    check_messages(k1, k2)?;
    let l = NsLayout::of(w);
    let (nx, n1, n2) = (l.inputs, l.out1, l.out2);
    let mut m = LpModel::new(l.num_vars());
    for x in 0..nx {
        m.set_var_name(l.p(x), format!("p_{x}"));
        for y1 in 0..n1 {
            m.set_var_name(l.r1(x, y1), format!("r1_{x}_{y1}"));
            for y2 in 0..n2 {
                m.set_var_name(l.r(x, y1, y2), format!("r_{x}_{y1}_{y2}"));
            }
        }
        for y2 in 0..n2 {
            m.set_var_name(l.r2(x, y2), format!("r2_{x}_{y2}"));
        }
    }
    let one = T::one();
    for y1 in 0..n1 {
        for y2 in 0..n2 {
            let terms = (0..nx).map(|x| (l.r(x, y1, y2), one.clone())).collect();
            m.add_named_constraint(terms, Relation::Eq, one.clone(), Some(format!("r_sum_{y1}_{y2}")))?;
        }
    }
    for y1 in 0..n1 {
        let terms = (0..nx).map(|x| (l.r1(x, y1), one.clone())).collect();
        m.add_named_constraint(terms, Relation::Eq, T::from_usize_exact(k2), Some(format!("r1_sum_{y1}")))?;
    }
    for y2 in 0..n2 {
        let terms = (0..nx).map(|x| (l.r2(x, y2), one.clone())).collect();
        m.add_named_constraint(terms, Relation::Eq, T::from_usize_exact(k1), Some(format!("r2_sum_{y2}")))?;
    }
    let terms = (0..nx).map(|x| (l.p(x), one.clone())).collect();
    m.add_named_constraint(terms, Relation::Eq, T::from_usize_exact(k1 * k2), Some("p_sum".into()))?;

    let neg = -T::one();
    for x in 0..nx {
        for y1 in 0..n1 {
            for y2 in 0..n2 {
                let r = l.r(x, y1, y2);
                m.add_named_constraint(
                    vec![(r, one.clone()), (l.r1(x, y1), neg.clone())],
                    Relation::Le,
                    T::zero(),
                    Some(format!("r_le_r1_{x}_{y1}_{y2}")),
                )?;
                m.add_named_constraint(
                    vec![(r, one.clone()), (l.r2(x, y2), neg.clone())],
                    Relation::Le,
                    T::zero(),
                    Some(format!("r_le_r2_{x}_{y1}_{y2}")),
                )?;
                m.add_named_constraint(
                    vec![
                        (l.p(x), one.clone()),
                        (l.r1(x, y1), neg.clone()),
                        (l.r2(x, y2), neg.clone()),
                        (r, one.clone()),
                    ],
                    Relation::Ge,
                    T::zero(),
                    Some(format!("incl_excl_{x}_{y1}_{y2}")),
                )?;
            }
        }
        for y1 in 0..n1 {
            m.add_named_constraint(
                vec![(l.r1(x, y1), one.clone()), (l.p(x), neg.clone())],
                Relation::Le,
                T::zero(),
                Some(format!("r1_le_p_{x}_{y1}")),
            )?;
        }
        for y2 in 0..n2 {
            m.add_named_constraint(
                vec![(l.r2(x, y2), one.clone()), (l.p(x), neg.clone())],
                Relation::Le,
                T::zero(),
                Some(format!("r2_le_p_{x}_{y2}")),
            )?;
        }
    }
    Ok(m)
}

fn check_messages(k1: usize, k2: usize) -> Result<()> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::BadParameters("message counts must be at least 1".into()));
    }
    Ok(())
}

/// Compact program whose optimum is the non-signaling joint success probability.
pub fn build_ns_joint<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize) -> Result<LpModel<T>> {
    let mut m = compact_constraints(w, k1, k2)?;
    let l = NsLayout::of(w);
    let c: T = scaled(k1 * k2);
    for x in 0..l.inputs {
        for y1 in 0..l.out1 {
            for y2 in 0..l.out2 {
                m.add_objective_term(l.r(x, y1, y2), c.clone() * w.get(x, y1, y2).clone());
            }
        }
    }
    Ok(m)
}

/// Compact program whose optimum is the non-signaling sum success probability.
pub fn build_ns_sum<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize) -> Result<LpModel<T>> {
    let mut m = compact_constraints(w, k1, k2)?;
    let l = NsLayout::of(w);
    let (w1, w2) = w.marginals();
    let c: T = scaled(2 * k1 * k2);
    for x in 0..l.inputs {
        for y1 in 0..l.out1 {
            m.add_objective_term(l.r1(x, y1), c.clone() * w1.get(x, y1).clone());
        }
        for y2 in 0..l.out2 {
            m.add_objective_term(l.r2(x, y2), c.clone() * w2.get(x, y2).clone());
        }
    }
    Ok(m)
}

pub fn build_ns<T: Scalar>(w: &ChannelTable<T>, k1: usize, k2: usize, objective: Objective) -> Result<LpModel<T>> {
    match objective {
        Objective::Joint => build_ns_joint(w, k1, k2),
        Objective::Sum => build_ns_sum(w, k1, k2),
    }
}

/// Variable layout of the full program: conditioning tuple `(i1, i2, y1, y2)`
/// outermost, then `(x, j1, j2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullLayout {
    pub inputs: usize,
    pub out1: usize,
    pub out2: usize,
    pub k1: usize,
    pub k2: usize,
}

impl FullLayout {
    pub fn new(inputs: usize, out1: usize, out2: usize, k1: usize, k2: usize) -> Self {
        FullLayout { inputs, out1, out2, k1, k2 }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn index(&self, x: usize, j1: usize, j2: usize, i1: usize, i2: usize, y1: usize, y2: usize) -> usize {
        let cond = ((i1 * self.k2 + i2) * self.out1 + y1) * self.out2 + y2;
        ((cond * self.inputs + x) * self.k1 + j1) * self.k2 + j2
    }

    pub fn num_vars(&self) -> u128 {
        [self.inputs, self.out1, self.out2, self.k1, self.k1, self.k2, self.k2]
            .iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(v as u128))
    }
}

/// Full three-party program over `P(x j1 j2 | (i1 i2) y1 y2)`. Each
/// non-signaling family is written as equalities against a reference input
/// (`(i1, i2) = (0, 0)`, `y1 = 0`, `y2 = 0`).
pub fn build_ns_full<T: Scalar>(
    w: &ChannelTable<T>,
    k1: usize,
    k2: usize,
    objective: Objective,
    cap: u128,
) -> Result<LpModel<T>> {
    check_messages(k1, k2)?;
    let (nx, n1, n2) = (w.input_size(), w.out1_size(), w.out2_size());
    let l = FullLayout::new(nx, n1, n2, k1, k2);
    let total = l.num_vars();
    if total > cap {
        return Err(Error::SizeCapExceeded { requested: total, cap });
    }
    let mut m = LpModel::new(total as usize);
    let one = T::one();
    let neg = -T::one();

    for i1 in 0..k1 {
        for i2 in 0..k2 {
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    let mut terms = Vec::with_capacity(nx * k1 * k2);
                    for x in 0..nx {
                        for j1 in 0..k1 {
                            for j2 in 0..k2 {
                                terms.push((l.index(x, j1, j2, i1, i2, y1, y2), one.clone()));
                            }
                        }
                    }
                    m.add_constraint(terms, Relation::Eq, one.clone())?;
                }
            }
        }
    }

    // Decoders' joint marginal does not depend on the messages.
    for i1 in 0..k1 {
        for i2 in 0..k2 {
            if (i1, i2) == (0, 0) {
                continue;
            }
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    for j1 in 0..k1 {
                        for j2 in 0..k2 {
                            let mut terms = Vec::with_capacity(2 * nx);
                            for x in 0..nx {
                                terms.push((l.index(x, j1, j2, i1, i2, y1, y2), one.clone()));
                                terms.push((l.index(x, j1, j2, 0, 0, y1, y2), neg.clone()));
                            }
                            m.add_constraint(terms, Relation::Eq, T::zero())?;
                        }
                    }
                }
            }
        }
    }

    // Sender and second decoder do not see y1.
    for i1 in 0..k1 {
        for i2 in 0..k2 {
            for y1 in 1..n1 {
                for y2 in 0..n2 {
                    for x in 0..nx {
                        for j2 in 0..k2 {
                            let mut terms = Vec::with_capacity(2 * k1);
                            for j1 in 0..k1 {
                                terms.push((l.index(x, j1, j2, i1, i2, y1, y2), one.clone()));
                                terms.push((l.index(x, j1, j2, i1, i2, 0, y2), neg.clone()));
                            }
                            m.add_constraint(terms, Relation::Eq, T::zero())?;
                        }
                    }
                }
            }
        }
    }

    // Sender and first decoder do not see y2.
    for i1 in 0..k1 {
        for i2 in 0..k2 {
            for y1 in 0..n1 {
                for y2 in 1..n2 {
                    for x in 0..nx {
                        for j1 in 0..k1 {
                            let mut terms = Vec::with_capacity(2 * k2);
                            for j2 in 0..k2 {
                                terms.push((l.index(x, j1, j2, i1, i2, y1, y2), one.clone()));
                                terms.push((l.index(x, j1, j2, i1, i2, y1, 0), neg.clone()));
                            }
                            m.add_constraint(terms, Relation::Eq, T::zero())?;
                        }
                    }
                }
            }
        }
    }

    match objective {
        Objective::Joint => {
            let c: T = scaled(k1 * k2);
            for i1 in 0..k1 {
                for i2 in 0..k2 {
                    for x in 0..nx {
                        for y1 in 0..n1 {
                            for y2 in 0..n2 {
                                let v = c.clone() * w.get(x, y1, y2).clone();
                                m.add_objective_term(l.index(x, i1, i2, i1, i2, y1, y2), v);
                            }
                        }
                    }
                }
            }
        }
        Objective::Sum => {
            // The y2-sum of W against a y2-independent marginal reproduces W1.
            let c: T = scaled(2 * k1 * k2);
            for i1 in 0..k1 {
                for i2 in 0..k2 {
                    for x in 0..nx {
                        for y1 in 0..n1 {
                            for y2 in 0..n2 {
                                let v = c.clone() * w.get(x, y1, y2).clone();
                                for j2 in 0..k2 {
                                    m.add_objective_term(l.index(x, i1, j2, i1, i2, y1, y2), v.clone());
                                }
                                for j1 in 0..k1 {
                                    m.add_objective_term(l.index(x, j1, i2, i1, i2, y1, y2), v.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Index of `d(j1 j2 | y1 y2)` in the decoder-box program.
pub fn box_index(out2: usize, k1: usize, k2: usize, j1: usize, j2: usize, y1: usize, y2: usize) -> usize {
    ((y1 * out2 + y2) * k1 + j1) * k2 + j2
}

/// Program over a decoder box `d(j1 j2 | y1 y2)` for a fixed deterministic
/// encoder `encoder[i1 * k2 + i2] = x`.
pub fn build_decoder_box_lp<T: Scalar>(
    w: &ChannelTable<T>,
    encoder: &[usize],
    k1: usize,
    k2: usize,
    objective: Objective,
) -> Result<LpModel<T>> {
    check_messages(k1, k2)?;
    if encoder.len() != k1 * k2 {
        return Err(Error::DimensionMismatch(format!("encoder has {} cells, expected {}", encoder.len(), k1 * k2)));
    }
    if let Some(&x) = encoder.iter().find(|&&x| x >= w.input_size()) {
        return Err(Error::DimensionMismatch(format!("encoder output {x} out of range")));
    }
    let (n1, n2) = (w.out1_size(), w.out2_size());
    let idx = |j1, j2, y1, y2| box_index(n2, k1, k2, j1, j2, y1, y2);
    let mut m = LpModel::new(n1 * n2 * k1 * k2);
    let one = T::one();
    let neg = -T::one();
    for y1 in 0..n1 {
        for y2 in 0..n2 {
            let mut terms = Vec::with_capacity(k1 * k2);
            for j1 in 0..k1 {
                for j2 in 0..k2 {
                    terms.push((idx(j1, j2, y1, y2), one.clone()));
                }
            }
            m.add_constraint(terms, Relation::Eq, one.clone())?;
        }
    }
    // First decoder's marginal is independent of y2.
    for y1 in 0..n1 {
        for y2 in 1..n2 {
            for j1 in 0..k1 {
                let mut terms = Vec::with_capacity(2 * k2);
                for j2 in 0..k2 {
                    terms.push((idx(j1, j2, y1, y2), one.clone()));
                    terms.push((idx(j1, j2, y1, 0), neg.clone()));
                }
                m.add_constraint(terms, Relation::Eq, T::zero())?;
            }
        }
    }
    // Second decoder's marginal is independent of y1.
    for y1 in 1..n1 {
        for y2 in 0..n2 {
            for j2 in 0..k2 {
                let mut terms = Vec::with_capacity(2 * k1);
                for j1 in 0..k1 {
                    terms.push((idx(j1, j2, y1, y2), one.clone()));
                    terms.push((idx(j1, j2, 0, y2), neg.clone()));
                }
                m.add_constraint(terms, Relation::Eq, T::zero())?;
            }
        }
    }
    for i1 in 0..k1 {
        for i2 in 0..k2 {
            let x = encoder[i1 * k2 + i2];
            for y1 in 0..n1 {
                for y2 in 0..n2 {
                    let wv = w.get(x, y1, y2).clone();
                    if wv.is_zero() {
                        continue;
                    }
                    match objective {
                        Objective::Joint => {
                            m.add_objective_term(idx(i1, i2, y1, y2), wv * scaled::<T>(k1 * k2));
                        }
                        Objective::Sum => {
                            let v = wv * scaled::<T>(2 * k1 * k2);
                            for j2 in 0..k2 {
                                m.add_objective_term(idx(i1, j2, y1, y2), v.clone());
                            }
                            for j1 in 0..k1 {
                                m.add_objective_term(idx(j1, i2, y1, y2), v.clone());
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Typed view of an optimal compact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct NsSolution<T> {
    pub layout: NsLayout,
    pub k1: usize,
    pub k2: usize,
    pub p: Vec<T>,
    pub r: Vec<T>,
    pub r1: Vec<T>,
    pub r2: Vec<T>,
    pub value: T,
}

fn invariant_tol<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::max_of(T::from_f64_value(NS_INVARIANT_TOL), T::tolerance())
    }
}

/// Splits a compact solution into its blocks and re-checks every constraint
/// family; a failure means the solver returned a bad point.
pub fn extract_ns_solution<T: Scalar>(
    w: &ChannelTable<T>,
    k1: usize,
    k2: usize,
    solution: &LpSolution<T>,
) -> Result<NsSolution<T>> {
    let l = NsLayout::of(w);
    if solution.assignment.len() != l.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "solution has {} entries, compact layout needs {}",
            solution.assignment.len(),
            l.num_vars()
        )));
    }
    let a = &solution.assignment;
    let p0 = l.inputs;
    let r0 = p0 + l.inputs * l.out1 * l.out2;
    let r10 = r0 + l.inputs * l.out1;
    let s = NsSolution {
        layout: l,
        k1,
        k2,
        p: a[..p0].to_vec(),
        r: a[p0..r0].to_vec(),
        r1: a[r0..r10].to_vec(),
        r2: a[r10..].to_vec(),
        value: solution.value.clone(),
    };
    s.check_invariants()?;
    Ok(s)
}

impl<T: Scalar> NsSolution<T> {
    pub fn p(&self, x: usize) -> &T {
        &self.p[x]
    }

    pub fn r(&self, x: usize, y1: usize, y2: usize) -> &T {
        &self.r[(x * self.layout.out1 + y1) * self.layout.out2 + y2]
    }

    pub fn r1(&self, x: usize, y1: usize) -> &T {
        &self.r1[x * self.layout.out1 + y1]
    }

    pub fn r2(&self, x: usize, y2: usize) -> &T {
        &self.r2[x * self.layout.out2 + y2]
    }

    pub fn check_invariants(&self) -> Result<()> {
        let tol = invariant_tol::<T>();
        let l = self.layout;
        let near = |a: &T, b: &T| (a.clone() - b.clone()).abs() <= tol;
        let fail = |what: String| Err(Error::InvariantViolation(what));
        for y1 in 0..l.out1 {
            for y2 in 0..l.out2 {
                let s = (0..l.inputs).fold(T::zero(), |acc, x| acc + self.r(x, y1, y2).clone());
                if !near(&s, &T::one()) {
                    return fail(format!("sum_x r[x,{y1},{y2}] = {s}"));
                }
            }
        }
        let k1 = T::from_usize_exact(self.k1);
        let k2 = T::from_usize_exact(self.k2);
        for y1 in 0..l.out1 {
            let s = (0..l.inputs).fold(T::zero(), |acc, x| acc + self.r1(x, y1).clone());
            if !near(&s, &k2) {
                return fail(format!("sum_x r1[x,{y1}] = {s}"));
            }
        }
        for y2 in 0..l.out2 {
            let s = (0..l.inputs).fold(T::zero(), |acc, x| acc + self.r2(x, y2).clone());
            if !near(&s, &k1) {
                return fail(format!("sum_x r2[x,{y2}] = {s}"));
            }
        }
        let ps = self.p.iter().fold(T::zero(), |acc, v| acc + v.clone());
        if !near(&ps, &(k1 * k2)) {
            return fail(format!("sum_x p[x] = {ps}"));
        }
        let le = |a: &T, b: &T| a.clone() - b.clone() <= tol;
        for x in 0..l.inputs {
            for y1 in 0..l.out1 {
                if !le(self.r1(x, y1), self.p(x)) {
                    return fail(format!("r1[{x},{y1}] > p[{x}]"));
                }
                for y2 in 0..l.out2 {
                    let r = self.r(x, y1, y2);
                    if !le(&T::zero(), r) || !le(r, self.r1(x, y1)) || !le(r, self.r2(x, y2)) {
                        return fail(format!("r[{x},{y1},{y2}] outside [0, min(r1, r2)]"));
                    }
                    let ie = self.p(x).clone() - self.r1(x, y1).clone() - self.r2(x, y2).clone() + r.clone();
                    if ie < -tol.clone() {
                        return fail(format!("p - r1 - r2 + r < 0 at ({x},{y1},{y2})"));
                    }
                }
            }
            for y2 in 0..l.out2 {
                if !le(self.r2(x, y2), self.p(x)) {
                    return fail(format!("r2[{x},{y2}] > p[{x}]"));
                }
            }
        }
        Ok(())
    }

    /// Rebuilds a full three-party box in [`FullLayout`] order. Needs
    /// `k1, k2 >= 2`; returns `None` otherwise.
    pub fn reconstruct_box(&self) -> Option<Vec<T>> {
        let (k1, k2) = (self.k1, self.k2);
        if k1 < 2 || k2 < 2 {
            return None;
        }
        let l = self.layout;
        let f = FullLayout::new(l.inputs, l.out1, l.out2, k1, k2);
        let kk = T::from_usize_exact(k1 * k2);
        let d_same = kk.clone();
        let d_j1 = kk.clone() * T::from_usize_exact(k1 - 1);
        let d_j2 = kk.clone() * T::from_usize_exact(k2 - 1);
        let d_both = kk * T::from_usize_exact((k1 - 1) * (k2 - 1));
        let mut out = vec![T::zero(); f.num_vars() as usize];
        for i1 in 0..k1 {
            for i2 in 0..k2 {
                for y1 in 0..l.out1 {
                    for y2 in 0..l.out2 {
                        for x in 0..l.inputs {
                            let r = self.r(x, y1, y2).clone();
                            let r1 = self.r1(x, y1).clone();
                            let r2 = self.r2(x, y2).clone();
                            let p = self.p(x).clone();
                            for j1 in 0..k1 {
                                for j2 in 0..k2 {
                                    let v = match (j1 == i1, j2 == i2) {
                                        (true, true) => r.clone() / d_same.clone(),
                                        (false, true) => (r2.clone() - r.clone()) / d_j1.clone(),
                                        (true, false) => (r1.clone() - r.clone()) / d_j2.clone(),
                                        (false, false) => {
                                            (p.clone() - r1.clone() - r2.clone() + r.clone()) / d_both.clone()
                                        }
                                    };
                                    out[f.index(x, j1, j2, i1, i2, y1, y2)] = v;
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(out)
    }
}

/// Largest violation of non-negativity, normalization and the three
/// non-signaling families for a full box in [`FullLayout`] order.
pub fn box_violation<T: Scalar>(layout: &FullLayout, b: &[T]) -> T {
    let f = layout;
    let mut worst = T::zero();
    for v in b {
        worst = T::max_of(worst, -v.clone());
    }
    let at = |x, j1, j2, i1, i2, y1, y2| b[f.index(x, j1, j2, i1, i2, y1, y2)].clone();
    let conds = || {
        (0..f.k1).flat_map(move |i1| {
            (0..f.k2).flat_map(move |i2| (0..f.out1).flat_map(move |y1| (0..f.out2).map(move |y2| (i1, i2, y1, y2))))
        })
    };
    for (i1, i2, y1, y2) in conds() {
        let mut total = T::zero();
        for x in 0..f.inputs {
            for j1 in 0..f.k1 {
                for j2 in 0..f.k2 {
                    total = total + at(x, j1, j2, i1, i2, y1, y2);
                }
            }
        }
        worst = T::max_of(worst, (total - T::one()).abs());
        for j1 in 0..f.k1 {
            for j2 in 0..f.k2 {
                let s = (0..f.inputs).fold(T::zero(), |acc, x| acc + at(x, j1, j2, i1, i2, y1, y2));
                let s0 = (0..f.inputs).fold(T::zero(), |acc, x| acc + at(x, j1, j2, 0, 0, y1, y2));
                worst = T::max_of(worst, (s - s0).abs());
            }
        }
        for x in 0..f.inputs {
            for j2 in 0..f.k2 {
                let s = (0..f.k1).fold(T::zero(), |acc, j1| acc + at(x, j1, j2, i1, i2, y1, y2));
                let s0 = (0..f.k1).fold(T::zero(), |acc, j1| acc + at(x, j1, j2, i1, i2, 0, y2));
                worst = T::max_of(worst, (s - s0).abs());
            }
            for j1 in 0..f.k1 {
                let s = (0..f.k2).fold(T::zero(), |acc, j2| acc + at(x, j1, j2, i1, i2, y1, y2));
                let s0 = (0..f.k2).fold(T::zero(), |acc, j2| acc + at(x, j1, j2, i1, i2, y1, 0));
                worst = T::max_of(worst, (s - s0).abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::simplex::lp_solve;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn one_input() -> ChannelTable<f64> {
        ChannelTable::new(1, 2, 2, vec![0.25; 4]).unwrap()
    }

    fn perfect() -> ChannelTable<f64> {
        crate::channel::DeterministicChannel::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap().to_table()
    }

    fn solve(m: &LpModel<f64>) -> f64 {
        lp_solve(m).unwrap().require_optimal().unwrap().value
    }

    #[test]
    fn compact_one_input() {
        let w = one_input();
        assert!((solve(&build_ns_joint(&w, 2, 2).unwrap()) - 0.25).abs() < 1e-9);
        assert!((solve(&build_ns_sum(&w, 2, 2).unwrap()) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn compact_perfect() {
        let w = perfect();
        assert!((solve(&build_ns_joint(&w, 2, 2).unwrap()) - 1.0).abs() < 1e-9);
        assert!((solve(&build_ns_sum(&w, 2, 2).unwrap()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn layout_is_dense() {
        let l = NsLayout { inputs: 3, out1: 2, out2: 4 };
        let mut seen = vec![false; l.num_vars()];
        for x in 0..3 {
            seen[l.p(x)] = true;
            for y1 in 0..2 {
                seen[l.r1(x, y1)] = true;
                for y2 in 0..4 {
                    seen[l.r(x, y1, y2)] = true;
                }
            }
            for y2 in 0..4 {
                seen[l.r2(x, y2)] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn full_matches_compact_one_input() {
        let w = one_input();
        for obj in [Objective::Joint, Objective::Sum] {
            let full = solve(&build_ns_full(&w, 2, 2, obj, DEFAULT_FULL_NS_CAP).unwrap());
            let compact = solve(&build_ns(&w, 2, 2, obj).unwrap());
            assert!((full - compact).abs() < 1e-7, "{obj:?}: {full} vs {compact}");
        }
    }

    #[test]
    fn full_cap() {
        let w = one_input();
        let err = build_ns_full(&w, 2, 2, Objective::Joint, 10).unwrap_err();
        assert!(matches!(err, Error::SizeCapExceeded { .. }));
    }

    #[test]
    fn decoder_box_perfect_identity() {
        let w = perfect();
        let m = build_decoder_box_lp(&w, &[0, 1, 2, 3], 2, 2, Objective::Joint).unwrap();
        assert!((solve(&m) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn product_box_is_feasible() {
        let w = perfect();
        let m = build_decoder_box_lp(&w, &[0, 1, 2, 3], 2, 2, Objective::Joint).unwrap();
        let d1 = [[0.3, 0.7], [0.6, 0.4]];
        let d2 = [[0.1, 0.9], [0.5, 0.5]];
        let mut d = vec![0.0; m.num_vars()];
        for y1 in 0..2 {
            for y2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        d[box_index(2, 2, 2, j1, j2, y1, y2)] = d1[y1][j1] * d2[y2][j2];
                    }
                }
            }
        }
        assert!(m.max_violation(&d) < 1e-12);
    }

    #[test]
    fn extraction_and_reconstruction() {
        let w: ChannelTable<f64> = ChannelTable::new(2, 2, 2, vec![0.5, 0.1, 0.2, 0.2, 0.05, 0.15, 0.3, 0.5]).unwrap();
        for obj in [Objective::Joint, Objective::Sum] {
            let m = build_ns(&w, 2, 2, obj).unwrap();
            let s = lp_solve(&m).unwrap().require_optimal().unwrap();
            let ns = extract_ns_solution(&w, 2, 2, &s).unwrap();
            let b = ns.reconstruct_box().unwrap();
            let f = FullLayout::new(2, 2, 2, 2, 2);
            assert!(box_violation(&f, &b) < 1e-9);
            let full = build_ns_full(&w, 2, 2, obj, DEFAULT_FULL_NS_CAP).unwrap();
            assert!((full.evaluate(&b) - s.value).abs() < 1e-9);
        }
    }

    #[test]
    fn rational_compact_equals_full() {
        let q = |n| ratio(n, 10);
        let w: ChannelTable<BigRational> =
            ChannelTable::new(2, 2, 2, vec![q(5), q(1), q(2), q(2), q(0), q(3), q(3), q(4)]).unwrap();
        let compact = lp_solve(&build_ns_joint(&w, 2, 2).unwrap()).unwrap().require_optimal().unwrap();
        let full = lp_solve(&build_ns_full(&w, 2, 2, Objective::Joint, DEFAULT_FULL_NS_CAP).unwrap())
            .unwrap()
            .require_optimal()
            .unwrap();
        assert_eq!(compact.value, full.value);
    }

    #[test]
    fn reconstruction_skipped_for_single_message() {
        let w = one_input();
        let s = lp_solve(&build_ns_joint(&w, 1, 2).unwrap()).unwrap().require_optimal().unwrap();
        let ns = extract_ns_solution(&w, 1, 2, &s).unwrap();
        assert!(ns.reconstruct_box().is_none());
    }

    #[test]
    fn corrupted_solution_is_rejected() {
        let w = one_input();
        let mut s = lp_solve(&build_ns_joint(&w, 2, 2).unwrap()).unwrap();
        s.assignment[0] += 1.0;
        assert!(matches!(extract_ns_solution(&w, 2, 2, &s), Err(Error::InvariantViolation(_))));
    }
}
