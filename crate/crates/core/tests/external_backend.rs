//! Cross-checks the in-repo simplex against microlp through the backend
//! seam, on pairwise, block and triangle-augmented belief LPs.

use isi_lp::frustration::{build_implication_graph, extract_supports, find_frustrated_cycles, triangulate_cycle};
use isi_lp::harness::draw_trial;
use isi_lp::lp_build::{build_block_lp, build_pairwise_lp, BeliefLp, PerturbSpec};
use isi_lp::lp_solve::{solve, solve_with, BackendResult, LpBackend, LpStatus, SolverParams};
use isi_lp::model::{build_grid_model, transmit, GridConfig};
use isi_lp::Result;
use microlp::{ComparisonOp, OptimizationDirection, Problem};

struct Microlp;

impl LpBackend for Microlp {
    fn solve_lp(&self, lp: &BeliefLp, _params: &SolverParams) -> Result<BackendResult> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = lp.objective().iter().map(|&c| p.add_var(c, (0.0, 1.0))).collect();
        for row in lp.rows() {
            let expr: Vec<_> = row.coeffs.iter().map(|&(c, a)| (vars[c], a)).collect();
            p.add_constraint(expr, ComparisonOp::Eq, row.rhs);
        }
        let (status, x) = match p.solve() {
            Ok(outcome) => {
                let sol = outcome.solution().expect("no limits are set").clone();
                (LpStatus::Optimal, vars.iter().map(|&v| sol.var_value(v)).collect())
            }
            Err(microlp::Error::Infeasible) => (LpStatus::Infeasible, Vec::new()),
            Err(microlp::Error::Unbounded) => (LpStatus::Unbounded, Vec::new()),
            Err(e) => panic!("microlp failed: {e}"),
        };
        Ok(BackendResult { status, x, iterations: 0 })
    }
}

fn agree(lp: &BeliefLp, label: &str) {
    let params = SolverParams::default();
    let ours = solve(lp, &params).unwrap();
    let theirs = solve_with(&Microlp, lp, &params).unwrap();
    assert_eq!(ours.status, LpStatus::Optimal, "{label}");
    assert_eq!(theirs.status, LpStatus::Optimal, "{label}");
    let scale = 1.0 + ours.value.abs();
    assert!(
        (ours.value - theirs.value).abs() <= 1e-7 * scale,
        "{label}: simplex {} vs microlp {}",
        ours.value,
        theirs.value
    );
    assert!(lp.max_row_residual(&theirs.beliefs) <= 1e-6, "{label}");
}

#[test]
fn pairwise_and_block_optima_agree() {
    for (n, alpha) in [(3, 0.2), (3, 0.5), (4, 0.3), (5, 0.2)] {
        for trial in 0..6 {
            let sigma = 0.2 + 0.15 * trial as f64;
            let m = build_grid_model(GridConfig::uniform(n, alpha, sigma)).unwrap();
            let (word, seeds) = draw_trial(11, sigma, trial, n * n);
            let obs = transmit(&m, &word, seeds.noise_seed).unwrap();
            let perturb = PerturbSpec::relative(seeds.perturb_seed, 1e-6);
            agree(&build_pairwise_lp(&m, &obs.field, &perturb), &format!("pairwise n={n} #{trial}"));
            agree(&build_block_lp(&m, &obs.field, &perturb).unwrap(), &format!("block n={n} #{trial}"));
        }
    }
}

#[test]
fn triangle_augmented_optima_agree() {
    let mut checked = 0;
    for trial in 0..20 {
        let sigma = 0.5 + 0.05 * trial as f64;
        let m = build_grid_model(GridConfig::uniform(5, 0.5, sigma)).unwrap();
        let (word, seeds) = draw_trial(3, sigma, trial, 25);
        let obs = transmit(&m, &word, seeds.noise_seed).unwrap();
        let mut lp = build_pairwise_lp(&m, &obs.field, &PerturbSpec::relative(seeds.perturb_seed, 1e-6));
        let sol = solve(&lp, &SolverParams::default()).unwrap();
        let graph = build_implication_graph(25, &extract_supports(&sol, &lp, 1e-7));
        let triangles: Vec<_> = find_frustrated_cycles(&graph)
            .iter()
            .flat_map(|c| triangulate_cycle(c).unwrap())
            .collect();
        if lp.add_triangle_cliques(&triangles).unwrap() > 0 {
            agree(&lp, &format!("triangles #{trial}"));
            checked += 1;
        }
    }
    assert!(checked > 0);
}
