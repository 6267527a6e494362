use proptest::prelude::*;

use stripe_quench::bisolver::{jacobian_apply, mean_flux_along, residual};
use stripe_quench::continuation::solve_by_continuation;
use stripe_quench::{newton_solve, ModelParams, PeriodicProfile, SolverOptions};

fn profile(n: usize, a: &[f64]) -> PeriodicProfile {
    PeriodicProfile::from_fn(n, |z| {
        a[0] * z.sin() + a[1] * z.cos() + a[2] * (2.0 * z).sin() + a[3] * (4.0 * z).cos() + a[4]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jacobian_matches_finite_difference(
        log_n in 5u32..=12,
        c_x in 0.0f64..5.0,
        k_y in 0.1f64..3.0,
        kappa in 0.0f64..0.8,
        k in 0.7f64..1.3,
        dk in -1.0f64..1.0,
        a in prop::collection::vec(-0.4f64..0.4, 5),
        b in prop::collection::vec(-0.4f64..0.4, 5),
    ) {
        let n = 1usize << log_n;
        let p = ModelParams::new(c_x, k_y, kappa).unwrap();
        let (psi, dpsi) = (profile(n, &a), profile(n, &b));
        let h = 1e-6;
        let (f0, ph0) = residual(&psi, k, &p).unwrap();
        let (f1, ph1) = residual(&psi.add(&dpsi.scale(h)).unwrap(), k + h * dk, &p).unwrap();
        let (jv, jph) = jacobian_apply(&psi, k, &p, &dpsi, dk).unwrap();
        let fd = f1.add(&f0.scale(-1.0)).unwrap().scale(1.0 / h);
        let err = fd.add(&jv.scale(-1.0)).unwrap().sup_norm();
        prop_assert!(err < 1e-4 * jv.sup_norm().max(1.0), "err {err}");
        prop_assert!(((ph1 - ph0) / h - jph).abs() < 1e-6);
    }

    #[test]
    fn residual_mean_vanishes_at_mean_flux(
        c_x in 0.0f64..5.0,
        k_y in 0.1f64..3.0,
        a in prop::collection::vec(-0.4f64..0.4, 5),
    ) {
        let p = ModelParams::new(c_x, k_y, 0.3).unwrap();
        let psi = profile(128, &a);
        let k = mean_flux_along(&psi, &p);
        let (r, _) = residual(&psi, k, &p).unwrap();
        prop_assert!(r.mean().abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn converged_solutions_are_monotone_and_gauge_invariant(
        c_x in 0.05f64..3.0,
        k_y in 0.3f64..3.0,
        kappa in 0.05f64..0.6,
        shift in 0.0f64..std::f64::consts::TAU,
    ) {
        let p = ModelParams::new(c_x, k_y, kappa).unwrap();
        let opts = SolverOptions::default();
        let r = solve_by_continuation(&p, 128, &opts).unwrap();
        prop_assert!(r.monotonicity_margin > 0.0);
        prop_assert!(r.k_x >= 1.0 - kappa && r.k_x <= 1.0 + kappa);
        let shifted = newton_solve((&r.psi.shift(shift), r.k_x), &p, &opts).unwrap();
        prop_assert!((shifted.k_x - r.k_x).abs() < 1e-10);
        let again = newton_solve((&r.psi, r.k_x), &p, &opts).unwrap();
        prop_assert!((again.k_x - r.k_x).abs() < 1e-12);
        prop_assert!(again.newton_iters <= 1);
    }
}
