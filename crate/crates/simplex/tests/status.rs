use lp_simplex::{solve, Options, Problem, ProblemError, Status};

#[test]
fn detects_infeasible_rows() {
    let mut p = Problem::new();
    let x = p.add_var(1.0, 0.0, 1.0);
    let y = p.add_var(1.0, 0.0, 1.0);
    p.add_eq_row(&[(x, 1.0), (y, 1.0)], 3.0).unwrap();
    let sol = solve(&p, &Options::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn detects_unbounded_direction() {
    let mut p = Problem::new();
    let x = p.add_var(-1.0, 0.0, f64::INFINITY);
    let y = p.add_var(0.0, 0.0, f64::INFINITY);
    p.add_eq_row(&[(x, 1.0), (y, -1.0)], 0.0).unwrap();
    let sol = solve(&p, &Options::default()).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn reports_iteration_limit() {
    let mut p = Problem::new();
    let vars: Vec<usize> = (0..6).map(|j| p.add_var(-(j as f64), 0.0, 1.0)).collect();
    for w in vars.windows(2) {
        p.add_eq_row(&[(w[0], 1.0), (w[1], 1.0)], 1.0).unwrap();
    }
    let opts = Options {
        max_iterations: 1,
        ..Options::default()
    };
    let sol = solve(&p, &opts).unwrap();
    assert_eq!(sol.status, Status::IterationLimit);
}

#[test]
fn bound_flips_without_rows() {
    let mut p = Problem::new();
    p.add_var(-1.0, 0.0, 2.0);
    p.add_var(3.0, -1.0, 4.0);
    let sol = solve(&p, &Options::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert_eq!(sol.x, vec![2.0, -1.0]);
    assert_eq!(sol.objective, -5.0);
}

#[test]
fn rejects_malformed_problems() {
    let mut p = Problem::new();
    p.add_var(0.0, 1.0, 0.0);
    assert!(matches!(
        solve(&p, &Options::default()),
        Err(ProblemError::InvalidBounds { var: 0, .. })
    ));
    let mut q = Problem::new();
    q.add_var(0.0, 0.0, 1.0);
    assert_eq!(
        q.add_eq_row(&[(3, 1.0)], 0.0),
        Err(ProblemError::UnknownVariable(3))
    );
}

#[test]
fn redundant_rows_leave_artificials_at_zero() {
    // Three copies of the same constraint.
    let mut p = Problem::new();
    let x = p.add_var(1.0, 0.0, 1.0);
    let y = p.add_var(2.0, 0.0, 1.0);
    for _ in 0..3 {
        p.add_eq_row(&[(x, 1.0), (y, 1.0)], 1.0).unwrap();
    }
    let sol = solve(&p, &Options::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-12);
}
