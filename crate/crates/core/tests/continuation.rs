use stripe_quench::asymptotics::small_cx_slope;
use stripe_quench::bisolver::adapt_modes;
use stripe_quench::continuation::{
    compactify, decompactify, secant_continue, solve_by_continuation, surface_scan, CellFlag,
    ContinuationOptions, ContinuationParam, SurfaceGrid,
};
use stripe_quench::{newton_solve, ModelParams, SolverOptions};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

#[test]
fn initial_stretching_from_hamiltonian_seed() {
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let seed = solve_by_continuation(&p, 128, &opts()).unwrap();
    let copts = ContinuationOptions {
        initial_step: 0.01,
        max_step: 0.05,
        ..Default::default()
    };
    let b = secant_continue(&[seed], ContinuationParam::Cx, 0.5, &opts(), &copts).unwrap();
    assert!(!b.truncated);
    assert_eq!(b.points.last().unwrap().param, 0.5);
    let ks = b.k_values();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    let slope = small_cx_slope(1.0, &p, 128, &opts()).unwrap().slope;
    let first = (b.points[1].k_x - b.points[0].k_x) / (b.points[1].param - b.points[0].param);
    assert!(
        (first - slope).abs() < 0.05 * slope.abs(),
        "{first} vs {slope}"
    );
}

#[test]
fn large_ky_branch_increases_toward_one() {
    let p = ModelParams::new(0.5, 5.0, 0.3).unwrap();
    let seed = solve_by_continuation(&p, 128, &opts()).unwrap();
    let copts = ContinuationOptions {
        initial_step: 0.2,
        log_scale: true,
        ..Default::default()
    };
    let b = secant_continue(&[seed], ContinuationParam::Ky, 40.0, &opts(), &copts).unwrap();
    let ks = b.k_values();
    assert!(ks.windows(2).all(|w| w[1] > w[0]), "{ks:?}");
    assert!(*ks.last().unwrap() < 1.0 && 1.0 - ks.last().unwrap() < 1e-4);
}

#[test]
fn identical_start_and_end() {
    let p = ModelParams::new(0.3, 1.0, 0.3).unwrap();
    let seed = solve_by_continuation(&p, 128, &opts()).unwrap();
    let b = secant_continue(
        std::slice::from_ref(&seed),
        ContinuationParam::Cx,
        0.3,
        &opts(),
        &ContinuationOptions::default(),
    )
    .unwrap();
    assert_eq!(b.points.len(), 1);
    assert_eq!(b.last().k_x, seed.k_x);
}

#[test]
fn resolve_is_idempotent() {
    let p = ModelParams::new(0.7, 0.8, 0.4).unwrap();
    let a = solve_by_continuation(&p, 128, &opts()).unwrap();
    let b = newton_solve((&a.psi, a.k_x), &p, &opts()).unwrap();
    assert!(b.newton_iters <= 1);
    assert!((a.k_x - b.k_x).abs() < 1e-12);
}

#[test]
fn large_speed_corner() {
    let grid = SurfaceGrid {
        cx_values: vec![500.0, 1000.0],
        ky_values: vec![0.5, 1.0],
    };
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let t = surface_scan(&grid, &p, &opts(), 64, None).unwrap();
    for c in &t.cells {
        assert_eq!(c.flag, CellFlag::Converged);
        assert!((c.k_x - 0.91f64.sqrt()).abs() < 1e-4, "{c:?}");
    }
}

#[test]
fn zero_speed_row_and_monotone_row() {
    let grid = SurfaceGrid {
        cx_values: vec![0.0, 0.1, 0.3, 1.0, 3.0, 10.0, f64::INFINITY],
        ky_values: vec![2.0],
    };
    let p = ModelParams::new(0.0, 1.0, 0.3).unwrap();
    let t = surface_scan(&grid, &p, &opts(), 64, None).unwrap();
    let row = t.row(0);
    assert!((row[0].k_x - 1.0).abs() < 1e-12);
    assert!((row[6].k_x - 0.91f64.sqrt()).abs() < 1e-12);
    let ks: Vec<f64> = row.iter().map(|c| c.k_x).collect();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    for c in row {
        assert!((0.7..=1.3).contains(&c.k_x));
    }
}

#[test]
fn compactified_axis() {
    let g = SurfaceGrid::compactified(5, 3).unwrap();
    assert_eq!(g.cx_values[0], 0.0);
    assert!(g.cx_values[4].is_infinite());
    assert!((g.cx_values[2] - 1.0).abs() < 1e-15);
    for v in [0.0, 0.3, 1.0, 17.0] {
        assert!((decompactify(compactify(v)) - v).abs() < 1e-12 * (1.0 + v));
    }
}

#[test]
fn steep_profile_requests_more_modes() {
    let p = ModelParams::new(1e-4, 1e-3, 0.3).unwrap();
    let res = solve_by_continuation(&p, 512, &opts()).unwrap();
    assert!(res.n_modes() > 512);
    let mut coarse = res.clone();
    coarse.psi = res.psi.resample(512).unwrap();
    assert_eq!(adapt_modes(&coarse, &opts()), 1024);
}
