use stripe_quench::heteroclinic::{
    continue_glide, detect_delocalization, inner_residual, inner_solve, near_origin_prediction,
    GlideOptions, HetOptions, HetProfile, HetSolution, KernelSource,
};
use stripe_quench::{Error, ModelParams};

fn params() -> ModelParams {
    ModelParams::new(0.0, 1.0, 0.3).unwrap()
}

fn grid(half_width: f64, log2: u32) -> HetOptions {
    HetOptions::default().with_grid(half_width, 1 << log2)
}

/// Converged solution at `k_tilde`, continued down from the Peierls guess at 24.
fn solve_at(k_tilde: f64, opts: &HetOptions) -> HetSolution {
    let p = params();
    let start = inner_solve(&HetProfile::peierls(24.0, &p, opts).unwrap(), &p, opts).unwrap();
    let (_, sols) = continue_glide(&start, k_tilde, &p, opts, &GlideOptions::default()).unwrap();
    sols.into_iter().last().unwrap()
}

#[test]
fn converged_profile_is_monotone_with_small_residual() {
    let opts = grid(400.0, 14);
    let sol = solve_at(5.0, &opts);
    assert!(sol.residual_inf <= opts.newton_tol);
    let (f, ph) = inner_residual(&sol.profile, &params(), &opts).unwrap();
    let res = f.iter().fold(ph.abs(), |a, v| a.max(v.abs()));
    assert!(res <= 10.0 * opts.newton_tol, "{res}");
    assert!(sol.profile.is_monotone());
    assert!(!sol.profile.conjecture);
    let k = sol.profile.k_x;
    assert!(k > 0.7 && k < 1.0, "{k}");
}

#[test]
fn glide_is_monotone_above_transition() {
    let p = params();
    let opts = grid(2000.0, 16);
    let start = inner_solve(&HetProfile::peierls(24.0, &p, &opts).unwrap(), &p, &opts).unwrap();
    let (curve, _) = continue_glide(&start, 5.0, &p, &opts, &GlideOptions::default()).unwrap();
    assert!(!curve.truncated);
    let pts = &curve.points;
    assert!(pts.windows(2).all(|w| w[1].k_x > w[0].k_x));
    // c(k_x) = k_x / k̃_y decreases as k_x increases
    assert!(pts
        .windows(2)
        .all(|w| w[1].wave_speed() < w[0].wave_speed()));
    for q in pts {
        assert!((0.7..=1.3).contains(&q.k_x));
        assert!(!q.conjecture);
    }
    // k̃_y = 10 sits between the transition plateau and the k̃_y = 24 anchor
    let k10 = curve.interpolate(10.0).unwrap();
    assert!(k10 > 0.7 && k10 < curve.interpolate(24.0).unwrap());
    let k24 = near_origin_prediction(1e-4, 2.4e-3, &curve).unwrap();
    assert!((k24 - 0.9).abs() < 0.03 * 0.9, "{k24}");
}

#[test]
fn tails_decay_algebraically() {
    let opts = grid(2000.0, 16);
    let sol = solve_at(5.0, &opts);
    // fitted inside |z| <= 100, away from the periodic wrap of the slow tail
    let (left, right) = sol.profile.tail_exponents(20.0, 100.0);
    assert!((right + 0.5).abs() < 0.1, "right exponent {right}");
    assert!((left + 1.5).abs() < 0.25, "left exponent {left}");
}

#[test]
fn domain_truncation_error_is_first_order() {
    let k: Vec<f64> = [(1000.0, 15), (2000.0, 16), (4000.0, 17)]
        .iter()
        .map(|&(l, m)| solve_at(5.0, &grid(l, m)).profile.k_x)
        .collect();
    let (d1, d2) = (k[1] - k[0], k[2] - k[1]);
    assert!(d1 > 0.0 && d2 > 0.0, "{k:?}");
    let ratio = d2 / d1;
    assert!((ratio - 0.5).abs() < 0.1, "ratio {ratio}, {k:?}");
}

#[test]
fn kernel_sources_agree() {
    let kummer = grid(400.0, 14);
    let spectral = HetOptions {
        kernel: KernelSource::Spectral,
        ..kummer.clone()
    };
    let a = solve_at(5.0, &kummer);
    let b = inner_solve(&a.profile, &params(), &spectral).unwrap();
    let d = (a.profile.k_x - b.profile.k_x).abs();
    assert!(d < 1e-5, "{d}");
}

#[test]
fn flat_flux_has_no_transition() {
    let p = ModelParams::new(0.0, 1.0, 0.0).unwrap();
    let opts = grid(400.0, 14);
    let start = inner_solve(&HetProfile::peierls(10.0, &p, &opts).unwrap(), &p, &opts).unwrap();
    let (curve, _) = continue_glide(&start, 1.0, &p, &opts, &GlideOptions::default()).unwrap();
    assert!(curve.points.iter().all(|q| q.k_x == 1.0));
    assert!(matches!(
        detect_delocalization(&curve, &opts),
        Err(Error::NotBracketed(_))
    ));
}

#[test]
fn restricted_solve_reports_base_point_loss() {
    let p = params();
    let opts = grid(400.0, 14);
    let start = inner_solve(&HetProfile::peierls(24.0, &p, &opts).unwrap(), &p, &opts).unwrap();
    let (curve, sols) = continue_glide(&start, 2.0, &p, &opts, &GlideOptions::default()).unwrap();
    let last = sols.last().unwrap();
    assert!(last.profile.conjecture);
    assert!(curve.points[0].conjecture);
    match inner_solve(&last.profile, &p, &opts) {
        Err(Error::BasePoint { k_x }) => assert!(k_x <= 0.7),
        other => panic!("expected base-point loss, got {other:?}"),
    }
}

#[test]
fn near_origin_prediction_below_the_curve() {
    let p = params();
    let opts = grid(400.0, 14);
    let start = inner_solve(&HetProfile::peierls(24.0, &p, &opts).unwrap(), &p, &opts).unwrap();
    let (curve, _) = continue_glide(&start, 8.0, &p, &opts, &GlideOptions::default()).unwrap();
    assert_eq!(near_origin_prediction(1e-4, 1e-4, &curve).unwrap(), 0.7);
    assert_eq!(
        near_origin_prediction(1e-3, 1.2e-2, &curve).unwrap(),
        curve.interpolate(12.0).unwrap()
    );
    assert!(near_origin_prediction(0.0, 1.0, &curve).is_err());
    assert!(near_origin_prediction(1e-3, 0.1, &curve).is_err());
}
