//! Checks the simplex optimum against exhaustive enumeration of the basic
//! solutions of small bounded LPs.

mod support;

use lp_simplex::{solve, Algorithm, Options, PivotRule, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use support::vertex_oracle::{brute_force_optimum, random_instance, to_problem};

#[test]
fn matches_vertex_enumeration_on_random_bounded_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..200 {
        let d = random_instance(&mut rng);
        let p = to_problem(&d);
        let expected = brute_force_optimum(&d).expect("instances are feasible by construction");
        let variants = [
            (Algorithm::Dual, PivotRule::Devex),
            (Algorithm::Primal, PivotRule::Devex),
            (Algorithm::Primal, PivotRule::Dantzig),
            (Algorithm::Primal, PivotRule::Bland),
        ];
        for (algorithm, rule) in variants {
            let opts = Options {
                algorithm,
                pivot_rule: rule,
                ..Options::default()
            };
            let sol = solve(&p, &opts).unwrap();
            assert_eq!(sol.status, Status::Optimal, "case {case} {algorithm:?}/{rule:?}");
            assert!(
                (sol.objective - expected).abs() <= 1e-8,
                "case {case} {algorithm:?}/{rule:?}: simplex {} vs enumeration {}",
                sol.objective,
                expected
            );
            assert!(p.max_violation(&sol.x) <= 1e-7, "case {case} {algorithm:?}/{rule:?}");
        }
    }
}

#[test]
fn solutions_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = to_problem(&random_instance(&mut rng));
        let a = solve(&p, &Options::default()).unwrap();
        let b = solve(&p, &Options::default()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.iterations, b.iterations);
    }
}
