//! Exhaustive vertex enumeration as an independent check on the simplex.

mod common;

use common::{brute_force, random_instance};
use ndarray::Array2;
use plaqr::wqr_solver::{solve_wqr, subgradient, SolverOptions, WqrProblem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_vertex_enumeration_on_200_instances() {
    let mut checked = 0;
    for seed in 0..200 {
        let (y, u, w, tau) = random_instance(seed);
        let Ok(p) = WqrProblem::new(y.clone(), u.clone(), w.clone(), tau) else {
            continue;
        };
        let sol = solve_wqr(&p, &SolverOptions::default());
        let brute = brute_force(&y, &u, &w, &vec![tau; y.len()]);
        if !brute.is_finite() {
            continue;
        }
        checked += 1;
        assert!(
            (sol.objective - brute).abs() <= 1e-9 * (1.0 + brute),
            "seed {seed}: simplex {} vs enumeration {brute}",
            sol.objective
        );
        let sg = subgradient(&p, &sol.theta, 1e-8);
        for (lo, hi) in sg {
            assert!(lo <= 1e-10 && hi >= -1e-10, "seed {seed}: 0 not in [{lo}, {hi}]");
        }
    }
    assert!(checked > 150);
}

#[test]
fn per_row_levels_match_vertex_enumeration() {
    let mut checked = 0;
    for seed in 1000..1150 {
        let (y, u, w, _) = random_instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taus: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(0.05..0.95)).collect();
        let Ok(p) = WqrProblem::new(y.clone(), u.clone(), w.clone(), 0.5) else {
            continue;
        };
        let p = p.with_row_taus(taus.clone()).unwrap();
        let sol = solve_wqr(&p, &SolverOptions::default());
        let brute = brute_force(&y, &u, &w, &taus);
        checked += 1;
        assert!(
            (sol.objective - brute).abs() <= 1e-9 * (1.0 + brute),
            "seed {seed}: simplex {} vs enumeration {brute}",
            sol.objective
        );
    }
    assert!(checked > 100);
}

proptest! {
    #[test]
    fn weight_scaling_keeps_solution(seed in 0u64..10_000, c in 0.01f64..100.0) {
        let (y, u, w, tau) = random_instance(seed);
        if let Ok(p) = WqrProblem::new(y.clone(), u.clone(), w.clone(), tau) {
            let scaled = WqrProblem::new(y, u, w.iter().map(|v| v * c).collect(), tau).unwrap();
            let a = solve_wqr(&p, &SolverOptions::default());
            let b = solve_wqr(&scaled, &SolverOptions::default());
            prop_assert!((a.objective * c - b.objective).abs() <= 1e-9 * (1.0 + b.objective));
        }
    }

    #[test]
    fn intercept_fit_is_a_sample_quantile(
        ys in proptest::collection::vec(-10.0f64..10.0, 1..30),
        tau in 0.01f64..0.99,
    ) {
        let n = ys.len();
        let p = WqrProblem::unweighted(ys.clone(), Array2::ones((n, 1)), tau).unwrap();
        let v = solve_wqr(&p, &SolverOptions::default()).theta[0];
        let below = ys.iter().filter(|&&y| y < v).count() as f64;
        let at_or_below = ys.iter().filter(|&&y| y <= v).count() as f64;
        prop_assert!(below <= n as f64 * tau + 1e-9);
        prop_assert!(at_or_below >= n as f64 * tau - 1e-9);
    }
}
