//! Asymptotic expansions of the selected wavenumber in the limits
//! `c_x → 0`, `c_x → ∞`, `k_y → 0` and `k_y → ∞`.
//!
//! All averages are `⨍ = (1/2π)∫` over one period and quadratures are
//! periodic trapezoid sums on [`QUADRATURE_NODES`] points.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bisolver::{adjoint_solve, SolveResult, SolverOptions};
use crate::continuation::{cx_zero_seed, solve_by_continuation};
use crate::error::{Error, Result};
use crate::fft;
use crate::model::ModelParams;
use crate::multiplier::{apply_multiplier, h_half_seminorm};
use crate::profile::PeriodicProfile;

pub const QUADRATURE_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    CxZero,
    CxSmall,
    CxLarge,
    KySmall,
    KyLarge,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cx_zero" => Ok(Regime::CxZero),
            "cx_small" => Ok(Regime::CxSmall),
            "cx_large" => Ok(Regime::CxLarge),
            "ky_small" => Ok(Regime::KySmall),
            "ky_large" => Ok(Regime::KyLarge),
            other => Err(Error::Parse(format!("unknown regime '{other}'"))),
        }
    }
}

/// Coefficients of an expansion `k_x = k_{x,0} + k_{x,1}ε + k_{x,2}ε² + k_{x,3}ε³ + …`.
///
/// The expansion variable is `c_x` (cx_small), `c_x^{-1}` (cx_large), `k_y`
/// (ky_small) or `k_y^{-1}` (ky_large).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub regime: Regime,
    pub kx0: f64,
    pub kx1: Option<f64>,
    pub kx2: Option<f64>,
    pub kx3: Option<f64>,
    pub note: String,
}

impl ExpansionReport {
    /// Evaluate the truncated expansion at the expansion variable `eps`.
    pub fn evaluate(&self, eps: f64) -> f64 {
        self.kx0
            + self.kx1.unwrap_or(0.0) * eps
            + self.kx2.unwrap_or(0.0) * eps * eps
            + self.kx3.unwrap_or(0.0) * eps.powi(3)
    }

    pub fn is_finite(&self) -> bool {
        self.kx0.is_finite()
            && [self.kx1, self.kx2, self.kx3]
                .iter()
                .all(|c| c.is_none_or(f64::is_finite))
    }
}

fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// `⨍g`, the selected wavenumber at `c_x = 0`.
pub fn kx_at_cx_zero(p: &ModelParams) -> f64 {
    p.mean_flux()
}

#[derive(Debug, Clone)]
pub struct SmallCxSlope {
    /// `dk_x/dc_x` at `c_x = 0`.
    pub slope: f64,
    /// `⨍ ψ_*|∂_ζ|ψ_*` of the `c_x = 0` solution.
    pub seminorm: f64,
    pub kx0: f64,
    pub base: SolveResult,
}

/// Initial slope `−(k_{x,0}/(2k_y)) ⨍ψ_*|∂_ζ|ψ_*` of `k_x(c_x)`.
pub fn small_cx_slope(
    k_y: f64,
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<SmallCxSlope> {
    if !(k_y > 0.0) {
        return Err(Error::InvalidParams("small-c_x slope needs k_y > 0".into()));
    }
    let q = p.with_cx(0.0).with_ky(k_y);
    let base = cx_zero_seed(&q, n_modes, solver)?;
    let seminorm = h_half_seminorm(&base.psi);
    let kx0 = base.k_x;
    Ok(SmallCxSlope {
        slope: -kx0 / (2.0 * k_y) * seminorm,
        seminorm,
        kx0,
        base,
    })
}

/// Leading-order seminorm `−2 log k_y + constant` for small k_y.
pub fn seminorm_log_asymptote(k_y: f64, constant: f64) -> f64 {
    -2.0 * k_y.ln() + constant
}

/// Least-squares constant in `seminorm ≈ −2 log k_y + constant` and the
/// largest relative residual of the fit.
pub fn fit_log_constant(samples: &[(f64, f64)]) -> (f64, f64) {
    let c = samples.iter().map(|(k, s)| s + 2.0 * k.ln()).sum::<f64>() / samples.len() as f64;
    let worst = samples
        .iter()
        .map(|(k, s)| (seminorm_log_asymptote(*k, c) - s).abs() / s.abs())
        .fold(0.0, f64::max);
    (c, worst)
}

/// Antiderivative data for `1/g`: Fourier coefficients of `1/g − ⨍1/g`
/// divided by `iℓ`, on `m` nodes.
fn inverse_flux_primitive(p: &ModelParams, m: usize) -> (f64, Vec<Complex64>) {
    let inv: Vec<f64> = nodes(m).iter().map(|v| 1.0 / p.flux(*v)).collect();
    let c = fft::forward(&inv);
    let mean = c[0].re;
    let prim = c
        .iter()
        .take(m / 2)
        .enumerate()
        .map(|(l, a)| {
            if l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                a / Complex64::new(0.0, l as f64)
            }
        })
        .collect();
    (mean, prim)
}

/// `P(v) − P(0)` with `P' = 1/g − ⨍1/g`, by direct Fourier summation.
fn eval_primitive(prim: &[Complex64], v: f64) -> f64 {
    let step = Complex64::from_polar(1.0, v);
    let mut e = step;
    let mut s = 0.0;
    for a in prim.iter().skip(1) {
        s += 2.0 * (a * (e - 1.0)).re;
        e *= step;
    }
    s
}

/// Leading-order large-`c_x` phase `ψ_0` solving `k_{x,0} ψ_{0,ζ} = g(ψ_0)`,
/// returned as the periodic correction `ψ_0(ζ) − ζ` on `n_points` modes,
/// together with `k_{x,0} = (⨍ 1/g)^{-1}`.
pub fn psi0_large_cx(p: &ModelParams, n_points: usize) -> Result<(PeriodicProfile, f64)> {
    if n_points < 64 {
        return Err(Error::InvalidParams("need at least 64 points".into()));
    }
    let m = 1024;
    let (mean_inv, prim) = inverse_flux_primitive(p, m);
    let k0 = 1.0 / mean_inv;
    // ζ(v) = v + k0 (P(v) − P(0)) is increasing; invert pointwise by Newton
    let n_work = n_points.clamp(256, 4096);
    let zeta = nodes(n_work);
    let mut vals = Vec::with_capacity(n_work);
    let mut v = 0.0;
    for z in &zeta {
        for _ in 0..60 {
            let f = v + k0 * eval_primitive(&prim, v) - z;
            let df = k0 / p.flux(v);
            let dv = f / df;
            v -= dv;
            if dv.abs() < 1e-15 {
                break;
            }
        }
        vals.push(v - z);
    }
    let psi = PeriodicProfile::from_physical(&vals)?.resample(n_points)?;
    Ok((psi, k0))
}

/// Sup-norm of `k_{x,0}ψ_{0,ζ} − g(ψ_0)` on the collocation grid.
pub fn large_cx_ode_residual(psi: &PeriodicProfile, k0: f64, p: &ModelParams) -> f64 {
    let d = psi.derivative().to_physical();
    psi.physical_rows()
        .iter()
        .zip(d)
        .map(|((z, v), dv)| (k0 * (1.0 + dv) - p.flux(z + v)).abs())
        .fold(0.0, f64::max)
}

/// `(k_{x,0}, k_{x,2})` of `k_x = k_{x,0} + k_{x,2} c_x^{-2} + O(c_x^{-4})`.
///
/// The solvability integral is evaluated in the variable `v = ψ_0` with
/// `ψ_1 = ((k_{x,0}² + k_y²)/k_{x,0}²) g log(g/k_{x,0})`.
pub fn large_cx_coeff(k_y: f64, p: &ModelParams) -> (f64, f64) {
    let n = QUADRATURE_NODES;
    let k0 = p.harmonic_mean_flux();
    let a = (k0 * k0 + k_y * k_y) / (k0 * k0);
    let s = k0 * k0 + k_y * k_y;
    let sum: f64 = nodes(n)
        .iter()
        .map(|&v| {
            let g = p.flux(v);
            let g1 = p.flux_deriv(v);
            let g2 = p.flux_second_deriv(v);
            let lg = (g / k0).ln();
            let h = g * lg;
            let h1 = g1 * lg + g1;
            let h2 = g2 * lg + g1 * g1 / g + g2;
            let psi1 = a * h;
            let psi1_zz = a * (h2 * g + h1 * g1) * g / (k0 * k0);
            let psi0_z = g / k0;
            let psi0_zzz = (g2 * g * g + g1 * g1 * g) / k0.powi(3);
            (0.5 * g2 * psi1 * psi1 - 2.0 * k0 * s * psi0_zzz + s * psi1_zz) / (psi0_z * psi0_z)
        })
        .sum();
    (k0, sum / n as f64)
}

/// Closed form for `g = 1 + κ sin v` to order κ⁴:
/// `sqrt(1−κ²) + ½(κ²(k_y⁴ − 1) + ¼κ⁴(3 + 5k_y⁴)) c_x^{-2}`.
pub fn large_cx_smallkappa(k_y: f64, c_x: f64, p: &ModelParams) -> Result<f64> {
    if !p.is_sinusoidal() {
        return Err(Error::Unsupported(
            "closed form is specific to the sinusoidal flux".into(),
        ));
    }
    Ok((1.0 - p.kappa * p.kappa).sqrt() + large_cx_smallkappa_coeff(k_y, p.kappa) / (c_x * c_x))
}

/// The `c_x^{-2}` coefficient of [`large_cx_smallkappa`].
pub fn large_cx_smallkappa_coeff(k_y: f64, kappa: f64) -> f64 {
    let k2 = kappa * kappa;
    let y4 = k_y.powi(4);
    0.5 * (k2 * (y4 - 1.0) + 0.25 * k2 * k2 * (3.0 + 5.0 * y4))
}

#[derive(Debug, Clone)]
pub struct SmallKyCoeff {
    pub kx0: f64,
    pub kx2: f64,
    pub base: SolveResult,
    pub adjoint: PeriodicProfile,
}

/// `(k_{x,0}(c_x), k_{x,2})` of `k_x = k_{x,0} + k_{x,2}k_y² + …` from the
/// adjoint solvability condition at `k_y = 0`.
pub fn small_ky_coeff(
    c_x: f64,
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<SmallKyCoeff> {
    if !(c_x > 0.0) {
        return Err(Error::InvalidParams(
            "small-k_y coefficient needs c_x > 0".into(),
        ));
    }
    let q = p.with_cx(c_x).with_ky(0.0);
    let base = solve_by_continuation(&q, n_modes, solver)?;
    small_ky_coeff_at(&base, solver)
}

/// As [`small_ky_coeff`], from an already converged `k_y = 0` solution.
pub fn small_ky_coeff_at(base: &SolveResult, solver: &SolverOptions) -> Result<SmallKyCoeff> {
    let q = &base.params;
    if q.k_y != 0.0 {
        return Err(Error::InvalidParams(
            "base solution must have k_y = 0".into(),
        ));
    }
    let c = q.c_x;
    let k0 = base.k_x;
    let adjoint = adjoint_solve(base, q, solver)?;
    let symbol = |ell: i64| {
        if ell == 0 {
            Complex64::new(1.0 / c, 0.0)
        } else {
            Complex64::new(c * c, 4.0 * c * k0 * ell as f64).powf(-0.5)
        }
    };
    let d1 = base.psi.derivative().add_constant(1.0);
    let d2 = base.psi.derivative().derivative();
    let m1 = apply_multiplier(&d1, symbol)?;
    let m2 = apply_multiplier(&d2, symbol)?;
    let num = adjoint.pairing(&m2)?;
    let den = c * adjoint.pairing(&m1)?;
    if den.abs() < 1e-12 {
        return Err(Error::IllConditioned(format!(
            "solvability denominator {den:.3e}"
        )));
    }
    Ok(SmallKyCoeff {
        kx0: k0,
        kx2: num / den,
        base: base.clone(),
        adjoint,
    })
}

/// Fitted trend of the small-k_y coefficient for small `c_x`:
/// `c_x^{-1/2}(c_1 log c_x + c_2)`.
pub fn small_ky_trend(c_x: f64, c1: f64, c2: f64) -> f64 {
    (c1 * c_x.ln() + c2) / c_x.sqrt()
}

/// `|∂_ζ|^{-1}` on mean-free data.
fn inverse_abs_derivative(f: &PeriodicProfile) -> PeriodicProfile {
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(l, c)| {
            if l == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                c / l as f64
            }
        })
        .collect();
    PeriodicProfile::from_coeffs(f.n_modes(), coeffs).expect("same length")
}

#[derive(Debug, Clone)]
pub struct LargeKyTerms {
    /// `|∂_ζ|^{-1}(g − ⨍g)`.
    pub psi1: PeriodicProfile,
    /// `|∂_ζ|^{-1}((g' + ½c_x)ψ_1)`, with the mean of the argument removed.
    pub psi2: PeriodicProfile,
    pub kx0: f64,
    /// `⨍ g'ψ_1`, identically zero.
    pub kx1: f64,
    /// Coefficient of `k_y^{-3}`.
    pub kx3: f64,
}

/// Terms of the large-`k_y` expansion in `ε = 1/k_y`.
///
/// `k_{x,3} = −½ c_x k_{x,0} Σ_{ℓ≠0} |(g')_ℓ|²/|ℓ|³`, which is `−¼c_xκ²`
/// for the sinusoidal flux.
pub fn large_ky_terms(c_x: f64, p: &ModelParams) -> Result<LargeKyTerms> {
    let n = QUADRATURE_NODES;
    let g = PeriodicProfile::from_fn(n, |v| p.flux(v))?;
    let gp = PeriodicProfile::from_fn(n, |v| p.flux_deriv(v))?;
    let kx0 = g.mean();
    let psi1 = inverse_abs_derivative(&g.add_constant(-kx0));
    let kx1 = gp.pairing(&psi1)?;
    let prod: Vec<f64> = gp
        .to_physical()
        .iter()
        .zip(psi1.to_physical())
        .map(|(a, b)| (a + 0.5 * c_x) * b)
        .collect();
    let prod = PeriodicProfile::from_physical(&prod)?;
    let psi2 = inverse_abs_derivative(&prod.add_constant(-prod.mean()));
    let sum: f64 = gp
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, c)| 2.0 * c.norm_sqr() / (l as f64).powi(3))
        .sum();
    Ok(LargeKyTerms {
        psi1,
        psi2,
        kx0,
        kx1,
        kx3: -0.5 * c_x * kx0 * sum,
    })
}

/// `k_x ≈ ⨍g + k_{x,3} k_y^{-3}` for large k_y.
pub fn large_ky_kx(c_x: f64, k_y: f64, p: &ModelParams) -> Result<f64> {
    let t = large_ky_terms(c_x, p)?;
    Ok(t.kx0 + t.kx3 / k_y.powi(3))
}

/// Report for a regime. `c_x` and `k_y` select the point where the
/// coefficients are evaluated (the fixed parameter of the expansion).
pub fn expansion_report(
    regime: Regime,
    c_x: f64,
    k_y: f64,
    p: &ModelParams,
    n_modes: usize,
    solver: &SolverOptions,
) -> Result<ExpansionReport> {
    let r = match regime {
        Regime::CxZero => ExpansionReport {
            regime,
            kx0: kx_at_cx_zero(p),
            kx1: None,
            kx2: None,
            kx3: None,
            note: "exact at c_x = 0 for every k_y > 0".into(),
        },
        Regime::CxSmall => {
            let s = small_cx_slope(k_y, p, n_modes, solver)?;
            ExpansionReport {
                regime,
                kx0: s.kx0,
                kx1: Some(s.slope),
                kx2: None,
                kx3: None,
                note: format!(
                    "expansion in c_x at k_y = {k_y}; seminorm {:.10e}",
                    s.seminorm
                ),
            }
        }
        Regime::CxLarge => {
            let (k0, k2) = large_cx_coeff(k_y, p);
            ExpansionReport {
                regime,
                kx0: k0,
                kx1: Some(0.0),
                kx2: Some(k2),
                kx3: None,
                note: format!("expansion in 1/c_x at k_y = {k_y}; error O(c_x^-4)"),
            }
        }
        Regime::KySmall => {
            let s = small_ky_coeff(c_x, p, n_modes, solver)?;
            ExpansionReport {
                regime,
                kx0: s.kx0,
                kx1: None,
                kx2: Some(s.kx2),
                kx3: None,
                note: format!("expansion in k_y at c_x = {c_x}"),
            }
        }
        Regime::KyLarge => {
            let t = large_ky_terms(c_x, p)?;
            ExpansionReport {
                regime,
                kx0: t.kx0,
                kx1: Some(0.0),
                kx2: Some(0.0),
                kx3: Some(t.kx3),
                note: format!(
                    "expansion in 1/k_y at c_x = {c_x}; the k_y -> inf limit {} differs from the c_x -> inf limit {}",
                    t.kx0,
                    p.harmonic_mean_flux()
                ),
            }
        }
    };
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    struct CosFlux;
    impl crate::model::FluxFunction for CosFlux {
        fn value(&self, v: f64) -> f64 {
            2.0 + v.cos()
        }
        fn deriv(&self, v: f64) -> f64 {
            -v.sin()
        }
    }

    #[test]
    fn cx_zero_values() {
        assert_eq!(
            kx_at_cx_zero(&ModelParams::new(0.0, 1.0, 0.3).unwrap()),
            1.0
        );
        assert!((kx_at_cx_zero(&ModelParams::new(0.0, 1.0, 0.9).unwrap()) - 1.0).abs() < 1e-14);
        let p = ModelParams::new(0.0, 1.0, 0.0)
            .unwrap()
            .with_flux(Arc::new(CosFlux))
            .unwrap();
        assert!((kx_at_cx_zero(&p) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_asymptote_plug_in() {
        assert!((seminorm_log_asymptote((-1.0f64).exp(), 0.0) - 2.0).abs() < 1e-14);
        assert!((seminorm_log_asymptote(1e-3, 0.0) - 13.815510557964274).abs() < 1e-12);
    }

    #[test]
    fn psi0_profiles() {
        let p = ModelParams::new(10.0, 1.0, 0.0).unwrap();
        let (psi, k0) = psi0_large_cx(&p, 64).unwrap();
        assert!(psi.sup_norm() < 1e-14);
        assert!((k0 - 1.0).abs() < 1e-15);
        let p = ModelParams::new(10.0, 1.0, 0.3).unwrap();
        let (psi, k0) = psi0_large_cx(&p, 256).unwrap();
        assert!((k0 - 0.91f64.sqrt()).abs() < 1e-14);
        assert!(large_cx_ode_residual(&psi, k0, &p) < 1e-10);
    }

    #[test]
    fn large_cx_coefficients() {
        let p = ModelParams::new(10.0, 0.0, 0.1).unwrap();
        let (k0, k2) = large_cx_coeff(0.0, &p);
        assert!((k0 - 0.99f64.sqrt()).abs() < 1e-14);
        // κ⁴ closed form −0.0049625; quadrature −0.00496244 differs at O(κ⁶)
        assert!((k2 + 0.004962437264446253).abs() < 1e-12);
        let (_, k2) = large_cx_coeff(1.0, &p);
        assert!(k2.abs() < 2e-4);
        let q = ModelParams::new(10.0, 1.0, 0.3).unwrap();
        let (_, k2) = large_cx_coeff(1.0, &q);
        assert!((k2 - 0.008700935468601081).abs() < 1e-12);
        let (_, a) = large_cx_coeff(5.0, &q);
        let (_, b) = large_cx_coeff(10.0, &q);
        assert!(a > 0.0 && b > 0.0);
        assert!((b / a / 16.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn smallkappa_closed_form() {
        let p = ModelParams::new(10.0, 0.0, 0.0).unwrap();
        assert_eq!(large_cx_smallkappa(0.0, 10.0, &p).unwrap(), 1.0);
        let p = ModelParams::new(10.0, 0.0, 0.1).unwrap();
        let v = large_cx_smallkappa(0.0, 10.0, &p).unwrap();
        assert!((v - (0.99f64.sqrt() - 0.0049625 / 100.0)).abs() < 1e-15);
        let (_, k2) = large_cx_coeff(0.0, &p);
        assert!((k2 - large_cx_smallkappa_coeff(0.0, 0.1)).abs() < 1e-6);
        let c = ModelParams::new(1.0, 1.0, 0.0)
            .unwrap()
            .with_flux(Arc::new(CosFlux))
            .unwrap();
        assert!(matches!(
            large_cx_smallkappa(1.0, 1.0, &c),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn large_ky_terms_sinusoidal() {
        let p = ModelParams::new(1.0, 10.0, 0.3).unwrap();
        let t = large_ky_terms(1.0, &p).unwrap();
        assert!(t.kx1.abs() < 1e-15);
        assert!((t.kx3 + 0.25 * 0.09).abs() < 1e-14);
        assert!((large_ky_kx(1.0, 10.0, &p).unwrap() - (1.0 - 2.25e-5)).abs() < 1e-15);
        let q = ModelParams::new(1.0, 10.0, 0.0).unwrap();
        assert_eq!(large_ky_kx(1.0, 10.0, &q).unwrap(), 1.0);
        // ψ_1 = κ sin ζ for g = 1 + κ sin ζ
        for (z, v) in t.psi1.physical_rows() {
            assert!((v - 0.3 * z.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn regime_parse() {
        assert_eq!(Regime::parse("ky_large").unwrap(), Regime::KyLarge);
        assert!(Regime::parse("nope").is_err());
    }
}
