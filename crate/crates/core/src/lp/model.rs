use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One row `Σ coeff·x  rel  rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub terms: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
    pub name: Option<String>,
}

impl<T: Scalar> Constraint<T> {
    pub fn lhs(&self, x: &[T]) -> T {
        self.terms.iter().fold(T::zero(), |acc, (j, c)| acc + c.clone() * x[*j].clone())
    }

    /// Signed violation; non-positive when satisfied.
    pub fn violation(&self, x: &[T]) -> T {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs - self.rhs.clone(),
            Relation::Ge => self.rhs.clone() - lhs,
            Relation::Eq => (lhs - self.rhs.clone()).abs(),
        }
    }
}

/// A maximisation problem over variables with finite lower bounds (default 0).
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel<T> {
    num_vars: usize,
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
    lower_bounds: Vec<T>,
    var_names: Vec<String>,
}

impl<T: Scalar> LpModel<T> {
    pub fn new(num_vars: usize) -> Self {
        LpModel {
            num_vars,
            objective: vec![T::zero(); num_vars],
            constraints: Vec::new(),
            lower_bounds: vec![T::zero(); num_vars],
            var_names: (0..num_vars).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[T] {
        &self.lower_bounds
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn set_objective(&mut self, objective: Vec<T>) -> Result<()> {
        if objective.len() != self.num_vars {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} coefficients for {} variables",
                objective.len(),
                self.num_vars
            )));
        }
        self.objective = objective;
        Ok(())
    }

    pub fn add_objective_term(&mut self, var: usize, coeff: T) {
        self.objective[var] = self.objective[var].clone() + coeff;
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: T) {
        self.lower_bounds[var] = bound;
    }

    pub fn set_var_name(&mut self, var: usize, name: impl Into<String>) {
        self.var_names[var] = name.into();
    }

    /// Adds a sparse row; repeated indices are merged and zero terms dropped.
    pub fn add_constraint(&mut self, terms: Vec<(usize, T)>, relation: Relation, rhs: T) -> Result<usize> {
        self.add_named_constraint(terms, relation, rhs, None)
    }

    pub fn add_named_constraint(
        &mut self,
        mut terms: Vec<(usize, T)>,
        relation: Relation,
        rhs: T,
        name: Option<String>,
    ) -> Result<usize> {
        if let Some((j, _)) = terms.iter().find(|(j, _)| *j >= self.num_vars) {
            return Err(Error::DimensionMismatch(format!("variable {j} out of range {}", self.num_vars)));
        }
        terms.sort_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(terms.len());
        for (j, c) in terms {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc = acc.clone() + c,
                _ => merged.push((j, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.constraints.push(Constraint { terms: merged, relation, rhs, name });
        Ok(self.constraints.len() - 1)
    }

    /// Dense constraint matrix row.
    pub fn dense_row(&self, i: usize) -> Vec<T> {
        let mut row = vec![T::zero(); self.num_vars];
        for (j, c) in &self.constraints[i].terms {
            row[*j] = c.clone();
        }
        row
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Largest constraint or bound violation of `x` (zero when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for c in &self.constraints {
            worst = T::max_of(worst, c.violation(x));
        }
        for (v, lb) in x.iter().zip(&self.lower_bounds) {
            worst = T::max_of(worst, lb.clone() - v.clone());
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &T| T::EXACT || v.to_f64_value().is_finite();
        if self.objective.len() != self.num_vars || self.lower_bounds.len() != self.num_vars {
            return Err(Error::DimensionMismatch("objective or bounds length".into()));
        }
        let all =
            self.objective.iter().chain(&self.lower_bounds).chain(
                self.constraints.iter().flat_map(|c| c.terms.iter().map(|(_, v)| v).chain(std::iter::once(&c.rhs))),
            );
        for v in all {
            if !finite(v) {
                return Err(Error::BadParameters("non-finite coefficient".into()));
            }
        }
        Ok(())
    }
}
