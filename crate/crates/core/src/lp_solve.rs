//! Solving belief LPs and classifying their optima.

use lp_simplex::{Algorithm, Options, PivotRule};

use crate::error::Result;
use crate::lp_build::{BeliefLp, SpinStateMap};
use crate::model::SpinWord;

pub const DEFAULT_FEAS_TOL: f64 = 1e-7;
pub const DEFAULT_INT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl From<lp_simplex::Status> for LpStatus {
    fn from(s: lp_simplex::Status) -> Self {
        match s {
            lp_simplex::Status::Optimal => LpStatus::Optimal,
            lp_simplex::Status::Infeasible => LpStatus::Infeasible,
            lp_simplex::Status::Unbounded => LpStatus::Unbounded,
            lp_simplex::Status::IterationLimit => LpStatus::IterationLimit,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub feas_tol: f64,
    pub int_tol: f64,
    pub opt_tol: f64,
    pub max_iterations: usize,
    pub pivot_rule: PivotRule,
    pub algorithm: Algorithm,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            feas_tol: DEFAULT_FEAS_TOL,
            int_tol: DEFAULT_INT_TOL,
            opt_tol: 1e-9,
            max_iterations: 1_000_000,
            pivot_rule: PivotRule::Devex,
            algorithm: Algorithm::Dual,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub beliefs: Vec<f64>,
    pub is_integral: bool,
    /// Present exactly when `is_integral`.
    pub word: Option<SpinWord>,
    pub iterations: usize,
}

/// Raw primal result of an LP backend.
#[derive(Clone, Debug)]
pub struct BackendResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Seam for plugging in other LP solvers.
pub trait LpBackend {
    fn solve_lp(&self, lp: &BeliefLp, params: &SolverParams) -> Result<BackendResult>;
}

/// The in-repo bounded-variable revised simplex.
#[derive(Clone, Copy, Debug, Default)]
pub struct SimplexBackend;

impl LpBackend for SimplexBackend {
    fn solve_lp(&self, lp: &BeliefLp, params: &SolverParams) -> Result<BackendResult> {
        let problem = lp.to_problem()?;
        let options = Options {
            feas_tol: params.feas_tol,
            opt_tol: params.opt_tol,
            max_iterations: params.max_iterations,
            pivot_rule: params.pivot_rule,
            algorithm: params.algorithm,
            ..Options::default()
        };
        let sol = lp_simplex::solve(&problem, &options)?;
        Ok(BackendResult {
            status: sol.status.into(),
            x: sol.x,
            iterations: sol.iterations,
        })
    }
}

pub fn solve(lp: &BeliefLp, params: &SolverParams) -> Result<LpSolution> {
    solve_with(&SimplexBackend, lp, params)
}

pub fn solve_with<B: LpBackend + ?Sized>(backend: &B, lp: &BeliefLp, params: &SolverParams) -> Result<LpSolution> {
    let raw = backend.solve_lp(lp, params)?;
    let (is_integral, word) = if raw.status == LpStatus::Optimal {
        check_integrality(&raw.x, lp, params.int_tol)
    } else {
        (false, None)
    };
    Ok(LpSolution {
        status: raw.status,
        value: lp.objective_at(&raw.x),
        beliefs: raw.x,
        is_integral,
        word,
        iterations: raw.iterations,
    })
}

/// Integral iff every site belief pair is within `int_tol` of a unit vector.
/// Edge and clique beliefs are not inspected.
pub fn check_integrality(beliefs: &[f64], lp: &BeliefLp, int_tol: f64) -> (bool, Option<SpinWord>) {
    assert_eq!(beliefs.len(), lp.num_columns());
    let mut spins = Vec::with_capacity(lp.num_sites());
    for i in 0..lp.num_sites() {
        let up = beliefs[lp.node_col(i, SpinStateMap::UP)];
        let down = beliefs[lp.node_col(i, SpinStateMap::DOWN)];
        if (up - 1.0).abs() <= int_tol && down.abs() <= int_tol {
            spins.push(1);
        } else if up.abs() <= int_tol && (down - 1.0).abs() <= int_tol {
            spins.push(-1);
        } else {
            return (false, None);
        }
    }
    let word = SpinWord::new(spins).expect("entries are ±1");
    (true, Some(word))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ip_oracle::{solve_ip_exhaustive, DEFAULT_TIE_TOL};
    use crate::lp_build::{build_block_lp, build_pairwise_lp, PerturbSpec};
    use crate::model::{build_grid_model, map_objective, transmit, GridConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_antiferromagnetic_edge() {
        let lp = BeliefLp::from_couplings(2, &[0.0, 0.0], &[(0, 1, 1.0)]).unwrap();
        let sol = solve(&lp, &SolverParams::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-9);
        assert!(sol.is_integral);
        let w = sol.word.unwrap();
        assert_eq!(w.spins()[0], -w.spins()[1]);
    }

    #[test]
    fn frustrated_triangle_has_half_integral_optimum() {
        let lp = BeliefLp::from_couplings(3, &[0.0; 3], &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let sol = solve(&lp, &SolverParams::default()).unwrap();
        assert!((sol.value + 3.0).abs() < 1e-9);
        // The half-integral point is feasible and attains the same value.
        let mut half = vec![0.5; 6];
        half.resize(lp.num_columns(), 0.0);
        for e in 0..3 {
            half[lp.edge_col(e, 0, 1)] = 0.5;
            half[lp.edge_col(e, 1, 0)] = 0.5;
        }
        assert!(lp.max_row_residual(&half) < 1e-15);
        assert!((lp.objective_at(&half) + 3.0).abs() < 1e-15);
        // Integer optimum by enumeration.
        let ip = (0..8u64)
            .map(|c| lp.word_objective(&SpinWord::from_bits(3, c)))
            .fold(f64::INFINITY, f64::min);
        assert!((ip + 1.0).abs() < 1e-12);
        assert!(!sol.is_integral);
        assert!(sol.word.is_none());
    }

    #[test]
    fn lp_value_lower_bounds_oracle() {
        let m = build_grid_model(GridConfig::uniform(3, 0.2, 0.6)).unwrap();
        for seed in 0..10u64 {
            let obs = transmit(&m, &SpinWord::from_bits(9, seed * 37), seed).unwrap();
            let ip = solve_ip_exhaustive(&m, &obs.field, DEFAULT_TIE_TOL).unwrap();
            let lp = build_pairwise_lp(&m, &obs.field, &PerturbSpec::none());
            let sol = solve(&lp, &SolverParams::default()).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal);
            assert!(sol.value <= ip.best_value + 1e-6);
            assert!(lp.max_row_residual(&sol.beliefs) <= 1e-7);
        }
    }

    #[test]
    fn weak_duality_against_random_words() {
        let m = build_grid_model(GridConfig::uniform(5, 0.3, 0.8)).unwrap();
        let obs = transmit(&m, &SpinWord::from_bits(25, 0x1ab_cdef), 4).unwrap();
        let lp = build_block_lp(&m, &obs.field, &PerturbSpec::none()).unwrap();
        let sol = solve(&lp, &SolverParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let w = SpinWord::from_bits(25, rng.random::<u64>());
            assert!(sol.value <= map_objective(&m, &obs.field, &w) + 1e-9);
        }
    }

    #[test]
    fn solves_are_bit_identical() {
        let m = build_grid_model(GridConfig::uniform(4, 0.4, 0.9)).unwrap();
        let obs = transmit(&m, &SpinWord::from_bits(16, 0x3c5a), 11).unwrap();
        let lp = build_pairwise_lp(&m, &obs.field, &PerturbSpec::relative(5, 1e-6));
        let a = solve(&lp, &SolverParams::default()).unwrap();
        let b = solve(&lp, &SolverParams::default()).unwrap();
        assert_eq!(a.beliefs, b.beliefs);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn integrality_classification() {
        let lp = BeliefLp::from_couplings(2, &[0.0, 0.0], &[(0, 1, 1.0)]).unwrap();
        let w = SpinWord::new(vec![1, -1]).unwrap();
        assert_eq!(check_integrality(&lp.vertex(&w), &lp, 1e-6), (true, Some(w)));
        let mut b = vec![0.0; lp.num_columns()];
        b[0] = 1.0 - 1e-7;
        b[1] = 1e-7;
        b[2] = 1e-7;
        b[3] = 1.0 - 1e-7;
        assert!(check_integrality(&b, &lp, 1e-6).0);
        b[2] = 0.5;
        b[3] = 0.5;
        assert_eq!(check_integrality(&b, &lp, 1e-6), (false, None));
    }
}
