//! Bounded-variable revised simplex for equality-constrained linear programs.
//!
//! Solves
//!
//! ```text
//! minimize    cᵀx
//! subject to  A x = b
//!             l ≤ x ≤ u
//! ```
//!
//! with finite lower bounds and finite or infinite upper bounds. The basis is
//! kept as a sparse LU factorization with product-form updates. The default
//! algorithm is a dual simplex with dual steepest-edge pricing and a
//! bound-flipping ratio test; the primal simplex prices with Devex weights
//! and falls back to Bland's rule after long runs of degenerate pivots. Returned solutions are basic (vertex)
//! solutions and the whole procedure is deterministic.
//!
//! ```
//! use lp_simplex::{Options, Problem, Status};
//!
//! let mut p = Problem::new();
//! let x = p.add_var(-1.0, 0.0, 1.0);
//! let y = p.add_var(-2.0, 0.0, 1.0);
//! p.add_eq_row(&[(x, 1.0), (y, 1.0)], 1.0).unwrap();
//! let sol = lp_simplex::solve(&p, &Options::default()).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.objective + 2.0).abs() < 1e-12);
//! ```

mod lu;
mod solver;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProblemError {
    #[error("variable {0} does not exist")]
    UnknownVariable(usize),
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("non-finite coefficient in row {0}")]
    NonFiniteCoefficient(usize),
    #[error("non-finite objective coefficient for variable {0}")]
    NonFiniteCost(usize),
}

/// A linear program with equality rows and bounded columns.
#[derive(Clone, Debug, Default)]
pub struct Problem {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    row_start: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    rhs: Vec<f64>,
}

impl Problem {
    pub fn new() -> Self {
        Problem {
            row_start: vec![0],
            ..Default::default()
        }
    }

    /// Adds a column with the given objective coefficient and bounds.
    ///
    /// The lower bound must be finite; the upper bound may be `f64::INFINITY`.
    /// Invalid bounds are caught by [`Problem::validate`].
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    /// Appends the row `Σ a_j x_j = rhs`. Repeated indices are summed.
    pub fn add_eq_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> Result<usize, ProblemError> {
        let row = self.rhs.len();
        if !rhs.is_finite() {
            return Err(ProblemError::NonFiniteCoefficient(row));
        }
        let mut sorted: Vec<(usize, f64)> = coeffs.to_vec();
        sorted.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
        for (j, a) in sorted {
            if j >= self.cost.len() {
                return Err(ProblemError::UnknownVariable(j));
            }
            if !a.is_finite() {
                return Err(ProblemError::NonFiniteCoefficient(row));
            }
            match merged.last_mut() {
                Some((k, v)) if *k == j => *v += a,
                _ => merged.push((j, a)),
            }
        }
        for (j, a) in merged {
            if a != 0.0 {
                self.row_idx.push(j);
                self.row_val.push(a);
            }
        }
        self.row_start.push(self.row_idx.len());
        self.rhs.push(rhs);
        Ok(row)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Structural nonzeros of the constraint matrix.
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Iterates `(column, coefficient)` pairs of one row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[row]..self.row_start[row + 1];
        self.row_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.row_val[r].iter().copied())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (i, &b) in self.rhs.iter().enumerate() {
            let lhs: f64 = self.row(i).map(|(j, a)| a * x[j]).sum();
            worst = worst.max((lhs - b).abs());
        }
        worst
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for j in 0..self.cost.len() {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || u.is_nan() || u < l || u == f64::NEG_INFINITY {
                return Err(ProblemError::InvalidBounds {
                    var: j,
                    lower: l,
                    upper: u,
                });
            }
            if !self.cost[j].is_finite() {
                return Err(ProblemError::NonFiniteCost(j));
            }
        }
        Ok(())
    }
}

/// Pricing rule for choosing the entering column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Devex approximate steepest edge, with Bland's rule on degenerate stalls.
    #[default]
    Devex,
    /// Largest reduced cost, with Bland's rule on degenerate stalls.
    Dantzig,
    /// Smallest eligible index throughout.
    Bland,
}

/// Simplex variant used to reach an optimal basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Dual simplex from the all-artificial basis with every column at its
    /// cheaper bound, followed by a primal clean-up pass. Columns without a
    /// finite upper bound get a temporary cost shift.
    #[default]
    Dual,
    /// Two-phase primal simplex.
    Primal,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub algorithm: Algorithm,
    /// Primal feasibility tolerance on bounds and rows.
    pub feas_tol: f64,
    /// Dual (reduced cost) optimality tolerance.
    pub opt_tol: f64,
    /// Smallest admissible pivot magnitude in the ratio test.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Entering-column rule of the primal simplex.
    pub pivot_rule: PivotRule,
    /// Eta columns accumulated before the basis is refactorized.
    pub refactor_interval: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub stall_limit: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            algorithm: Algorithm::Dual,
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 1_000_000,
            pivot_rule: PivotRule::Devex,
            refactor_interval: 100,
            stall_limit: 1_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    /// Objective at `x`. Meaningful for every status; for infeasible
    /// problems `x` is the phase-one end point.
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Iterations spent before the primal optimization pass: phase one for
    /// the primal algorithm, the dual simplex for the dual one.
    pub phase_one_iterations: usize,
}

/// Solves `problem` to optimality.
pub fn solve(problem: &Problem, options: &Options) -> Result<Solution, ProblemError> {
    problem.validate()?;
    Ok(solver::Simplex::new(problem, options).run())
}
