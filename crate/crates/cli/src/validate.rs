//! Cross-check suite behind `stripe-quench validate`.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use stripe_quench::asymptotics::{
    fit_log_constant, large_cx_coeff, large_cx_smallkappa_coeff, small_cx_slope, small_ky_coeff,
    small_ky_trend,
};
use stripe_quench::bisolver::{jacobian_apply, residual, solve_cx_zero};
use stripe_quench::continuation::{
    secant_continue, solve_by_continuation, ContinuationOptions, ContinuationParam,
};
use stripe_quench::heteroclinic::{
    continue_glide, detect_delocalization, inner_solve, GlideCurve, GlideOptions, HetOptions,
    HetProfile,
};
use stripe_quench::localmodel::{bvp_speed, sg_speed};
use stripe_quench::multiplier::{multiplier_symbol, Branch};
use stripe_quench::specfun::{spectral_kernel, KummerTable};
use stripe_quench::{newton_solve, ModelParams, PeriodicProfile, SolveResult, SolverOptions};

use crate::manifest::ManifestBuilder;
use crate::ConvergenceFailure;

const SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type CheckResult = anyhow::Result<(bool, String)>;

fn run(name: &str, f: impl FnOnce() -> CheckResult) -> Check {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    let c = Check {
        name: name.to_string(),
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    };
    println!(
        "{:<34} {:<4} {:>9.2}s  {}",
        c.name,
        if c.passed { "PASS" } else { "FAIL" },
        c.seconds,
        c.detail
    );
    c
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn solver() -> SolverOptions {
    SolverOptions::default()
}

pub fn cmd_validate(quick: bool, out: &Path) -> anyhow::Result<()> {
    let mut m = ManifestBuilder::new("validate");
    m.params(&serde_json::json!({ "quick": quick }))
        .solver(&solver())
        .seed(format!("StdRng seed {SEED:#x}"));
    let mut checks = vec![
        run("symbol identities (N=1024)", check_symbols),
        run("hamiltonian identity", check_hamiltonian),
        run("jacobian vs finite difference", check_jacobian),
        run("monotonicity margin", check_monotone),
        run("translation gauge", check_translation),
        run("re-solve idempotence", check_idempotence),
        run("harmonic-mean limit", check_harmonic),
        run("local sine-gordon model", check_local),
    ];
    if quick {
        checks.push(run("kernel oracle (L=100)", || {
            check_kernel(100.0, 1 << 14)
        }));
    } else {
        checks.push(run("kernel oracle (L=1e3)", || check_kernel(1e3, 1 << 18)));
        checks.push(run("large c_x coefficient", check_large_cx));
        checks.push(run("small c_x slope", check_small_cx));
        checks.push(run("large k_y cubic law", check_large_ky));
        checks.push(run("small k_y coefficient", check_small_ky));
        let mut curve = None;
        checks.push(run("delocalization transition", || {
            let (ok, detail, c) = check_glide()?;
            curve = Some(c);
            Ok((ok, detail))
        }));
        checks.push(run("near-origin consistency", || match &curve {
            Some(c) => check_near_origin(c),
            None => Ok((false, "no glide curve".into())),
        }));
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("validate.json");
    let mut f = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &checks)?;
    f.flush()?;
    m.output(&path);
    m.finish(out)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        return Err(ConvergenceFailure(format!("{failed} checks failed")).into());
    }
    Ok(())
}

fn check_symbols() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1024 {
        let p = ModelParams::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), 0.3)?;
        let k = rng.gen_range(0.7..1.3);
        let ell = rng.gen_range(-2048i64..2048);
        let plus = multiplier_symbol(ell, k, &p, Branch::Plus);
        let minus = multiplier_symbol(ell, k, &p, Branch::Minus);
        let z = Complex64::new(p.k_y * p.k_y * (ell * ell) as f64, p.c_x * k * ell as f64);
        let scale = 1.0 + z.norm() + p.c_x * p.c_x;
        let sum = (plus + minus + p.c_x).norm() / scale.sqrt();
        let prod = (plus * minus + z).norm() / scale;
        let conj =
            (multiplier_symbol(-ell, k, &p, Branch::Plus) - plus.conj()).norm() / scale.sqrt();
        worst = worst.max(sum).max(prod).max(conj);
        worst = worst.max(multiplier_symbol(0, k, &p, Branch::Plus).norm());
    }
    Ok((worst < 1e-12, format!("max relative defect {worst:.2e}")))
}

fn check_hamiltonian() -> CheckResult {
    let mut worst: f64 = 0.0;
    for kappa in [0.1, 0.3, 0.6] {
        for ky in [0.5, 1.0, 2.0] {
            let p = ModelParams::new(0.0, ky, kappa)?;
            let r = solve_cx_zero(&p, 256, &solver())?;
            worst = worst.max((r.k_x - 1.0).abs());
        }
    }
    Ok((worst < 1e-8, format!("max |k_x - 1| = {worst:.2e}")))
}

fn random_profile(rng: &mut StdRng, n: usize) -> anyhow::Result<PeriodicProfile> {
    let a: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.3..0.3)).collect();
    Ok(PeriodicProfile::from_fn(n, |z| {
        a[0] * z.sin()
            + a[1] * z.cos()
            + a[2] * (2.0 * z).sin()
            + a[3] * (3.0 * z).cos()
            + a[4] * (5.0 * z).sin()
            + a[5]
    })?)
}

fn check_jacobian() -> CheckResult {
    let mut rng = StdRng::seed_from_u64(SEED + 1);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let p = ModelParams::new(rng.gen_range(0.1..3.0), rng.gen_range(0.2..3.0), 0.3)?;
        let psi = random_profile(&mut rng, 1024)?;
        let dpsi = random_profile(&mut rng, 1024)?;
        let k = rng.gen_range(0.8..1.1);
        let dk = rng.gen_range(-1.0..1.0);
        let (f0, ph0) = residual(&psi, k, &p)?;
        let (f1, ph1) = residual(&psi.add(&dpsi.scale(h))?, k + h * dk, &p)?;
        let (jv, jph) = jacobian_apply(&psi, k, &p, &dpsi, dk)?;
        let fd = f1.add(&f0.scale(-1.0))?.scale(1.0 / h);
        let err = fd
            .add(&jv.scale(-1.0))?
            .sup_norm()
            .max(((ph1 - ph0) / h - jph).abs());
        worst = worst.max(err / jv.sup_norm().max(1.0));
    }
    Ok((
        worst < 1e-4,
        format!("max relative defect {worst:.2e} at h = 1e-6"),
    ))
}

fn random_solutions(seed: u64, count: usize) -> anyhow::Result<Vec<SolveResult>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = ModelParams::new(
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.1..0.6),
            )?;
            Ok(solve_by_continuation(&p, 1024, &solver())?)
        })
        .collect()
}

fn check_monotone() -> CheckResult {
    let sols = random_solutions(SEED + 2, 4)?;
    let worst = sols
        .iter()
        .map(|s| s.monotonicity_margin)
        .fold(f64::INFINITY, f64::min);
    Ok((worst > 0.0, format!("min margin {worst:.3e}")))
}

fn check_translation() -> CheckResult {
    let sols = random_solutions(SEED + 3, 4)?;
    let mut worst: f64 = 0.0;
    for s in &sols {
        let shifted = s.psi.shift(0.7);
        let r = newton_solve((&shifted, s.k_x), &s.params, &solver())?;
        worst = worst.max((r.k_x - s.k_x).abs());
    }
    Ok((worst < 1e-10, format!("max |Δk_x| = {worst:.2e}")))
}

fn check_idempotence() -> CheckResult {
    let sols = random_solutions(SEED + 4, 4)?;
    let mut worst: f64 = 0.0;
    let mut iters = 0;
    for s in &sols {
        let r = newton_solve((&s.psi, s.k_x), &s.params, &solver())?;
        worst = worst.max((r.k_x - s.k_x).abs());
        iters = iters.max(r.newton_iters);
    }
    Ok((
        worst < 1e-12 && iters <= 1,
        format!("max |Δk_x| = {worst:.2e}, max iterations {iters}"),
    ))
}

fn check_harmonic() -> CheckResult {
    let p = ModelParams::new(200.0, 1.0, 0.3)?;
    let r = solve_by_continuation(&p, 128, &solver())?;
    let d = (r.k_x - 0.91f64.sqrt()).abs();
    Ok((
        d < 5e-4,
        format!("|k_x - sqrt(0.91)| = {d:.2e} at c_x = 200"),
    ))
}

fn check_local() -> CheckResult {
    let p = ModelParams::new(0.0, 1.0, 0.3)?;
    let c1 = sg_speed(1.0, &p)?.c;
    let ks: Vec<f64> = (0..=10).map(|i| 0.75 + 0.025 * i as f64).collect();
    let cs: Vec<f64> = ks
        .iter()
        .map(|k| sg_speed(*k, &p).map(|w| w.c))
        .collect::<Result<_, _>>()?;
    let increasing = cs.windows(2).all(|w| w[0] > w[1]);
    let mut worst: f64 = 0.0;
    for (k, c) in ks.iter().zip(&cs) {
        worst = worst.max((bvp_speed(*k, &p, 80)? - c).abs());
    }
    Ok((
        c1.abs() < 1e-8 && increasing && worst < 1e-6,
        format!("c(1) = {c1:.1e}, increasing {increasing}, shooting vs BVP {worst:.1e}"),
    ))
}

fn check_kernel(l: f64, m: usize) -> CheckResult {
    let (k, kt) = (0.8, 2.0);
    let spectral = spectral_kernel(l, m, k, kt)?;
    let table = KummerTable::new(k, kt, l)?;
    let h = 2.0 * l / m as f64;
    let mut worst: f64 = 0.0;
    for (j, s) in spectral.iter().enumerate().take(9 * m / 10).skip(m / 10) {
        let z = -l + j as f64 * h;
        worst = worst.max((s - table.kernel(z)?).abs());
    }
    Ok((worst < 1e-6, format!("sup difference {worst:.2e}")))
}

fn check_large_cx() -> CheckResult {
    let mut details = Vec::new();
    let mut ok = true;
    for (kappa, k_y) in [(0.3, 1.0), (0.1, 0.0)] {
        let p = ModelParams::new(200.0, k_y, kappa)?;
        let (k0, k2) = large_cx_coeff(k_y, &p);
        for c in [50.0, 100.0, 200.0] {
            let r = solve_by_continuation(&p.with_cx(c), 128, &solver())?;
            let scaled = (r.k_x - k0) * c * c;
            ok &= rel(scaled, k2) < 0.05;
            details.push(format!("κ={kappa} c={c}: {scaled:.6} vs {k2:.6}"));
        }
        if kappa == 0.1 {
            // the closed form drops O(κ⁶) terms
            ok &= (k2 - large_cx_smallkappa_coeff(k_y, kappa)).abs() <= kappa.powi(6);
        }
    }
    Ok((ok, details.join("; ")))
}

fn check_small_cx() -> CheckResult {
    let p = ModelParams::new(0.0, 1.0, 0.3)?;
    let s = small_cx_slope(1.0, &p, 128, &solver())?;
    let r1 = solve_by_continuation(&p.with_cx(1e-4), 128, &solver())?;
    let r2 = solve_by_continuation(&p.with_cx(2e-4), 128, &solver())?;
    let fd = (r2.k_x - r1.k_x) / 1e-4;
    let e1 = rel(fd, s.slope);
    let samples: Vec<(f64, f64)> = [1e-2, 1e-3]
        .iter()
        .map(|&ky| small_cx_slope(ky, &p, 128, &solver()).map(|r| (ky, r.seminorm)))
        .collect::<Result<_, _>>()?;
    let (c, resid) = fit_log_constant(&samples);
    Ok((
        e1 < 0.02 && resid < 0.1,
        format!(
            "slope {fd:.6} vs {:.6} ({:.2}%), log fit constant {c:.4} residual {:.2}%",
            s.slope,
            100.0 * e1,
            100.0 * resid
        ),
    ))
}

fn check_large_ky() -> CheckResult {
    let mut ok = true;
    let mut details = Vec::new();
    for c in [0.5, 1.0] {
        let want = 0.25 * c * 0.09;
        for ky in [10.0, 20.0, 40.0] {
            let r = solve_by_continuation(&ModelParams::new(c, ky, 0.3)?, 128, &solver())?;
            let got = (1.0 - r.k_x) * ky.powi(3);
            let e = rel(got, want);
            ok &= e < 0.1;
            details.push(format!("c={c} k_y={ky}: {:.1}%", 100.0 * e));
        }
    }
    Ok((ok, details.join(", ")))
}

fn check_small_ky() -> CheckResult {
    let c = 1e-2;
    let p = ModelParams::new(c, 0.0, 0.3)?;
    let coeff = small_ky_coeff(c, &p, 128, &solver())?;
    let mut cur = coeff.base.clone();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for ky in [2.5e-4, 5e-4, 7.5e-4, 1e-3] {
        cur = newton_solve((&cur.psi, cur.k_x), &p.with_ky(ky), &solver())?;
        let x = ky * ky;
        sxy += x * (cur.k_x - coeff.kx0);
        sxx += x * x;
    }
    let fit = sxy / sxx;
    let e1 = rel(coeff.kx2, fit);
    let mut worst: f64 = 0.0;
    for cx in [1e-2, 1e-3, 1e-4] {
        let k2 = small_ky_coeff(cx, &p.with_cx(cx), 128, &solver())?.kx2;
        worst = worst.max(rel(k2, small_ky_trend(cx, -0.3422, -1.0439)));
    }
    Ok((
        e1 < 0.05 && worst < 0.15,
        format!(
            "adjoint {:.5} vs fit {fit:.5} ({:.2}%), trend max {:.1}%",
            coeff.kx2,
            100.0 * e1,
            100.0 * worst
        ),
    ))
}

fn check_glide() -> anyhow::Result<(bool, String, GlideCurve)> {
    let p = ModelParams::new(0.0, 1.0, 0.3)?;
    let opts = HetOptions::default();
    let guess = HetProfile::peierls(24.0, &p, &opts)?;
    let start = inner_solve(&guess, &p, &opts)?;
    let (mut curve, _) = continue_glide(&start, 0.5, &p, &opts, &GlideOptions::default())?;
    let anchor = curve.interpolate(24.0)?;
    let plateau = curve
        .points
        .iter()
        .filter(|q| q.k_tilde <= 1.0)
        .map(|q| (q.k_x - 0.7).abs())
        .fold(0.0, f64::max);
    let det = detect_delocalization(&curve, &opts);
    curve.transition = det.as_ref().ok().copied();
    let (t_ok, t_text) = match &det {
        Ok(t) => (
            (t.estimate() - 2.88).abs() <= 0.15,
            format!("{:.3}", t.estimate()),
        ),
        Err(e) => (false, e.to_string()),
    };
    let ok = rel(anchor, 0.9) < 0.03 && plateau <= 0.01 && t_ok;
    Ok((
        ok,
        format!("k_x(24) = {anchor:.4}, plateau dev {plateau:.4}, transition {t_text}"),
        curve,
    ))
}

fn check_near_origin(curve: &GlideCurve) -> CheckResult {
    let p = ModelParams::new(1e-3, 1.0, 0.3)?;
    let mut gaps = Vec::new();
    for cx in [1e-3, 5e-4] {
        let start = solve_by_continuation(&p.with_cx(cx).with_ky(12.0 * cx), 128, &solver())?;
        let copts = ContinuationOptions {
            initial_step: 0.1,
            max_step: 0.2,
            log_scale: true,
            ..Default::default()
        };
        let b = secant_continue(&[start], ContinuationParam::Ky, 4.0 * cx, &solver(), &copts)?;
        let gap = b
            .points
            .iter()
            .map(|q| curve.interpolate(q.param / cx).map(|g| (q.k_x - g).abs()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    let factor = gaps[0] / gaps[1];
    Ok((
        factor >= 1.5,
        format!(
            "max gaps {:.4e}, {:.4e}, factor {factor:.2}",
            gaps[0], gaps[1]
        ),
    ))
}
