//! Dense two-phase primal simplex with Bland's rule.
//!
//! Variables are shifted by their lower bounds, rows are flipped to have a
//! non-negative right-hand side, and `<=` rows start with their slack basic.
//! Phase one minimises the sum of artificials; phase two optimises the real
//! objective with artificial columns frozen out.

use crate::error::{Error, Result};
use crate::lp::model::{LpModel, Relation};
use crate::scalar::Scalar;

pub const DEFAULT_PIVOT_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub value: T,
    pub assignment: Vec<T>,
    pub pivots: usize,
}

impl<T: Scalar> LpSolution<T> {
    /// Turns a non-optimal status into the matching error.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(Error::Infeasible),
            LpStatus::Unbounded => Err(Error::Unbounded),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub pivot_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { pivot_limit: DEFAULT_PIVOT_LIMIT }
    }
}

pub fn lp_solve<T: Scalar>(model: &LpModel<T>) -> Result<LpSolution<T>> {
    lp_solve_with(model, SimplexOptions::default())
}

struct Tableau<T> {
    rows: usize,
    cols: usize,
    /// `rows × (cols + 1)`, last column is the right-hand side.
    a: Vec<T>,
    /// Reduced costs; the last entry holds minus the objective value.
    obj: Vec<T>,
    basis: Vec<usize>,
    pivots: usize,
    limit: usize,
    tol: T,
    chop: T,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> &T {
        &self.a[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.cols)
    }

    /// Installs objective `cost` (maximised) and prices out the basis.
    fn set_objective(&mut self, cost: &[T]) {
        let w = self.cols + 1;
        let mut obj: Vec<T> = cost.iter().cloned().chain(std::iter::once(T::zero())).collect();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..w {
                let v = &self.a[i * w + j];
                if !v.is_zero() {
                    obj[j] = obj[j].clone() - cb.clone() * v.clone();
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, e: usize) -> Result<()> {
        if self.pivots >= self.limit {
            return Err(Error::IterationLimit(self.pivots));
        }
        self.pivots += 1;
        let w = self.cols + 1;
        let piv = self.a[r * w + e].clone();
        let row_start = r * w;
        let nonzero: Vec<usize> = (0..w).filter(|&j| !self.a[row_start + j].is_zero()).collect();
        for &j in &nonzero {
            let v = self.a[row_start + j].clone() / piv.clone();
            self.a[row_start + j] = v;
        }
        let pivot_row: Vec<(usize, T)> = nonzero.iter().map(|&j| (j, self.a[row_start + j].clone())).collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + e].clone();
            if f.is_zero() {
                continue;
            }
            for (j, pv) in &pivot_row {
                let idx = i * w + j;
                let mut v = self.a[idx].clone() - f.clone() * pv.clone();
                if !T::EXACT && v.abs() < self.chop {
                    v = T::zero();
                }
                self.a[idx] = v;
            }
            self.a[i * w + e] = T::zero();
        }
        let f = self.obj[e].clone();
        if !f.is_zero() {
            for (j, pv) in &pivot_row {
                let mut v = self.obj[*j].clone() - f.clone() * pv.clone();
                if !T::EXACT && v.abs() < self.chop {
                    v = T::zero();
                }
                self.obj[*j] = v;
            }
            self.obj[e] = T::zero();
        }
        self.basis[r] = e;
        Ok(())
    }

    /// Bland's rule: lowest-index improving column, then the minimum-ratio row
    /// whose basic variable has the lowest index.
    fn run(&mut self, allowed: &[bool]) -> Result<Outcome> {
        loop {
            let entering = (0..self.cols).find(|&j| allowed[j] && self.obj[j] > self.tol);
            let Some(e) = entering else {
                return Ok(Outcome::Optimal);
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.rows {
                let a = self.at(i, e);
                if *a <= self.tol {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let diff = ratio.clone() - br.clone();
                        if diff < -self.tol.clone() || (diff.abs() <= self.tol && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Ok(Outcome::Unbounded),
                Some((r, _)) => self.pivot(r, e)?,
            }
        }
    }
}

pub fn lp_solve_with<T: Scalar>(model: &LpModel<T>, opts: SimplexOptions) -> Result<LpSolution<T>> {
    model.validate()?;
    let n = model.num_vars();
    let lb = model.lower_bounds();
    let m = model.constraints().len();

    // Shift by lower bounds and normalise signs.
    let mut rows: Vec<(Vec<(usize, T)>, Relation, T)> = Vec::with_capacity(m);
    for c in model.constraints() {
        let shift = c.terms.iter().fold(T::zero(), |acc, (j, v)| acc + v.clone() * lb[*j].clone());
        let rhs = c.rhs.clone() - shift;
        if rhs.is_negative() {
            let terms = c.terms.iter().map(|(j, v)| (*j, -v.clone())).collect();
            rows.push((terms, c.relation.flipped(), -rhs));
        } else {
            rows.push((c.terms.clone(), c.relation, rhs));
        }
    }

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let w = cols + 1;
    let mut a = vec![T::zero(); m * w];
    let mut basis = vec![0; m];
    let mut slack = n;
    let mut art = n + n_slack;
    for (i, (terms, rel, rhs)) in rows.into_iter().enumerate() {
        for (j, v) in terms {
            a[i * w + j] = v;
        }
        a[i * w + cols] = rhs;
        match rel {
            Relation::Le => {
                a[i * w + slack] = T::one();
                basis[i] = slack;
                slack += 1;
            }
            Relation::Ge => {
                a[i * w + slack] = -T::one();
                slack += 1;
                a[i * w + art] = T::one();
                basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                a[i * w + art] = T::one();
                basis[i] = art;
                art += 1;
            }
        }
    }

    let mut t = Tableau {
        rows: m,
        cols,
        a,
        obj: Vec::new(),
        basis,
        pivots: 0,
        limit: opts.pivot_limit,
        tol: T::tolerance(),
        chop: if T::EXACT { T::zero() } else { T::tolerance() * T::from_f64_value(1e-4) },
    };
    let is_art = |j: usize| j >= n + n_slack;

    if n_art > 0 {
        let cost: Vec<T> = (0..cols).map(|j| if is_art(j) { -T::one() } else { T::zero() }).collect();
        t.set_objective(&cost);
        let all = vec![true; cols];
        t.run(&all)?;
        // Phase-one optimum is -obj[rhs] = -(sum of artificials).
        let infeas = t.obj[cols].clone();
        if infeas > t.tol.clone() * T::from_usize_exact(m.max(1)) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: T::zero(),
                assignment: Vec::new(),
                pivots: t.pivots,
            });
        }
        // Drive remaining artificials out where a structural pivot exists.
        for i in 0..m {
            if !is_art(t.basis[i]) {
                continue;
            }
            let candidate = (0..n + n_slack)
                .filter(|&j| t.at(i, j).abs() > t.tol)
                .max_by(|&x, &y| t.at(i, x).abs().partial_cmp(&t.at(i, y).abs()).unwrap_or(std::cmp::Ordering::Equal));
            if let Some(j) = candidate {
                t.pivot(i, j)?;
            }
        }
    }

    let mut cost = vec![T::zero(); cols];
    cost[..n].clone_from_slice(model.objective());
    t.set_objective(&cost);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    let outcome = t.run(&allowed)?;
    if let Outcome::Unbounded = outcome {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: T::zero(),
            assignment: Vec::new(),
            pivots: t.pivots,
        });
    }

    let mut x = lb.to_vec();
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            let v = t.rhs(i).clone();
            x[b] = x[b].clone() + if !T::EXACT && v.is_negative() { T::zero() } else { v };
        }
    }
    let value = model.evaluate(&x);
    Ok(LpSolution { status: LpStatus::Optimal, value, assignment: x, pivots: t.pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    #[test]
    fn single_bound() {
        let mut m = LpModel::<f64>::new(1);
        m.set_objective(vec![1.0]).unwrap();
        m.add_constraint(vec![(0, 1.0)], Relation::Le, 3.0).unwrap();
        let s = lp_solve(&m).unwrap().require_optimal().unwrap();
        assert!((s.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_face() {
        let mut m = LpModel::<f64>::new(2);
        m.set_objective(vec![1.0, 1.0]).unwrap();
        m.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0).unwrap();
        let s = lp_solve(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut m = LpModel::<f64>::new(1);
        m.set_objective(vec![1.0]).unwrap();
        m.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0).unwrap();
        m.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0).unwrap();
        assert_eq!(lp_solve(&m).unwrap().status, LpStatus::Infeasible);
        assert_eq!(lp_solve(&m).unwrap().require_optimal().unwrap_err(), Error::Infeasible);

        let mut u = LpModel::<f64>::new(2);
        u.set_objective(vec![1.0, 0.0]).unwrap();
        u.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0).unwrap();
        assert_eq!(lp_solve(&u).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equalities_and_lower_bounds() {
        // max 2x + 3y, x + y = 4, x >= 1, y <= 2.5, y >= -1
        let mut m = LpModel::<f64>::new(2);
        m.set_objective(vec![2.0, 3.0]).unwrap();
        m.set_lower_bound(0, 1.0);
        m.set_lower_bound(1, -1.0);
        m.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 4.0).unwrap();
        m.add_constraint(vec![(1, 1.0)], Relation::Le, 2.5).unwrap();
        let s = lp_solve(&m).unwrap().require_optimal().unwrap();
        assert!((s.value - 10.5).abs() < 1e-9);
        assert!((s.assignment[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn exact_rational() {
        // max x + y, 3x + y <= 2, x + 3y <= 2 -> x = y = 1/2
        let mut m = LpModel::<BigRational>::new(2);
        m.set_objective(vec![ratio(1, 1), ratio(1, 1)]).unwrap();
        m.add_constraint(vec![(0, ratio(3, 1)), (1, ratio(1, 1))], Relation::Le, ratio(2, 1)).unwrap();
        m.add_constraint(vec![(0, ratio(1, 1)), (1, ratio(3, 1))], Relation::Le, ratio(2, 1)).unwrap();
        let s = lp_solve(&m).unwrap().require_optimal().unwrap();
        assert_eq!(s.value, ratio(1, 1));
        assert_eq!(s.assignment, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn pivot_limit() {
        let mut m = LpModel::<f64>::new(2);
        m.set_objective(vec![1.0, 1.0]).unwrap();
        m.add_constraint(vec![(0, 1.0), (1, 2.0)], Relation::Le, 4.0).unwrap();
        m.add_constraint(vec![(0, 2.0), (1, 1.0)], Relation::Le, 4.0).unwrap();
        let err = lp_solve_with(&m, SimplexOptions { pivot_limit: 1 }).unwrap_err();
        assert_eq!(err, Error::IterationLimit(1));
    }

    #[test]
    fn redundant_equalities() {
        let mut m = LpModel::<f64>::new(2);
        m.set_objective(vec![1.0, 2.0]).unwrap();
        m.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0).unwrap();
        m.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0).unwrap();
        let s = lp_solve(&m).unwrap().require_optimal().unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn f32_solves() {
        let mut m = LpModel::<f32>::new(2);
        m.set_objective(vec![1.0, 1.0]).unwrap();
        m.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0).unwrap();
        let s = lp_solve(&m).unwrap().require_optimal().unwrap();
        assert!((s.value - 1.0).abs() < 1e-5);
    }
}
