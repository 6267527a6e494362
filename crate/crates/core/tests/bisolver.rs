use stripe_quench::bisolver::{
    adapt_modes, adjoint_apply, adjoint_solve, jacobian_apply, linear_apply, mean_flux_along,
    newton_solve, reconstruct_field, residual, solve_cx_zero, SolverOptions,
};
use stripe_quench::{Error, ModelParams, PeriodicProfile};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn residual_of_zero_profile_at_cx_zero() {
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let psi = PeriodicProfile::zeros(64).unwrap();
    let (r, ph) = residual(&psi, 1.0, &p).unwrap();
    for (z, v) in stripe_quench::profile::grid(64).iter().zip(r.to_physical()) {
        assert!((v + 0.3 * z.sin()).abs() < 1e-14);
    }
    assert_eq!(ph, 0.0);
}

#[test]
fn hamiltonian_case_selects_mean_flux() {
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let res = solve_cx_zero(&p, 128, &opts()).unwrap();
    assert!((res.k_x - 1.0).abs() < 1e-8, "k_x = {}", res.k_x);
    assert!(res.residual_inf < 1e-10);
    assert!(res.is_monotone());
    assert!((mean_flux_along(&res.psi, &p) - res.k_x).abs() < 1e-10);
}

#[test]
fn jacobian_k_column_at_cx_zero_is_constant() {
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let psi = PeriodicProfile::from_fn(32, |z| 0.2 * z.sin()).unwrap();
    let zero = PeriodicProfile::zeros(32).unwrap();
    let (j, ph) = jacobian_apply(&psi, 1.0, &p, &zero, 1.0).unwrap();
    assert!((j.mean() - 1.0).abs() < 1e-15);
    assert!(j.add_constant(-1.0).sup_norm() < 1e-15);
    assert_eq!(ph, 0.0);
}

#[test]
fn kernel_direction_at_convergence() {
    let p = ModelParams::new(0.0, 0.7, 0.3).unwrap();
    let res = solve_cx_zero(&p, 128, &opts()).unwrap();
    let kernel = res.psi.derivative().add_constant(1.0);
    let (j, _) = jacobian_apply(&res.psi, res.k_x, &p, &kernel, 0.0).unwrap();
    assert!(j.sup_norm() < 1e2 * 1e-10, "{}", j.sup_norm());
}

#[test]
fn large_speed_approaches_harmonic_mean() {
    let p = ModelParams::new(1000.0, 1.0, 0.3).unwrap();
    let guess = PeriodicProfile::zeros(128).unwrap();
    let res = newton_solve((&guess, 0.95), &p, &opts()).unwrap();
    assert!((res.k_x - 0.91f64.sqrt()).abs() < 1e-3, "k_x = {}", res.k_x);
    assert!((res.omega - 1000.0 * res.k_x).abs() < 1e-12);
    assert!((res.c_y.unwrap() + res.k_x * 1000.0).abs() < 1e-9);
}

#[test]
fn zero_speed_zero_wavenumber_rejected() {
    assert!(matches!(
        ModelParams::new(0.0, 0.0, 0.3),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn mode_adaptation() {
    let p = ModelParams::new(0.0, 1.0, 0.0).unwrap();
    let res = solve_cx_zero(&p, 512, &opts()).unwrap();
    assert_eq!(adapt_modes(&res, &opts()), 256);
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let small = SolverOptions {
        min_modes: 64,
        ..opts()
    };
    let res = solve_cx_zero(&p, 64, &small).unwrap();
    assert_eq!(adapt_modes(&res, &small), 64);
}

#[test]
fn adjoint_null_vector() {
    let p = ModelParams::new(1.0, 0.0, 0.3).unwrap();
    let guess = PeriodicProfile::zeros(128).unwrap();
    let res = newton_solve((&guess, 0.95), &p, &opts()).unwrap();
    let ad = adjoint_solve(&res, &p, &opts()).unwrap();
    let r = adjoint_apply(&res, &p, &ad).unwrap();
    assert!(r.sup_norm() < 1e-10, "adjoint residual {}", r.sup_norm());
    let kernel = res.psi.derivative().add_constant(1.0);
    assert!((ad.pairing(&kernel).unwrap() - 1.0).abs() < 1e-10);
    let v = PeriodicProfile::from_fn(128, |z| (3.0 * z).cos() + 0.4 * (z + 0.3).sin()).unwrap();
    let lv = linear_apply(&res, &p, &v).unwrap();
    assert!(ad.pairing(&lv).unwrap().abs() < 1e-8);
}

#[test]
fn adjoint_is_kernel_at_cx_zero() {
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let res = solve_cx_zero(&p, 128, &opts()).unwrap();
    let ad = adjoint_solve(&res, &p, &opts()).unwrap();
    let kernel = res.psi.derivative().add_constant(1.0);
    let scaled = kernel.scale(1.0 / kernel.pairing(&kernel).unwrap());
    assert!(ad.add(&scaled.scale(-1.0)).unwrap().sup_norm() < 1e-8);
}

#[test]
fn field_reconstruction() {
    let p = ModelParams::new(1.0, 1.0, 0.3).unwrap();
    let guess = PeriodicProfile::zeros(64).unwrap();
    let res = newton_solve((&guess, 0.95), &p, &opts()).unwrap();
    let rows = reconstruct_field(&res, &p, &[0.0, -50.0]).unwrap();
    let zeta = stripe_quench::profile::grid(64);
    for ((v, z), s) in rows[0].iter().zip(&zeta).zip(res.psi.to_physical()) {
        assert!((v - z - s).abs() < 1e-13);
    }
    for (v, z) in rows[1].iter().zip(&zeta) {
        let affine = res.k_x * -50.0 + z + res.psi.mean();
        assert!((v - affine).abs() < 1e-6);
    }
    assert!(matches!(
        reconstruct_field(&res, &p, &[0.5]),
        Err(Error::PositiveX(_))
    ));
}
