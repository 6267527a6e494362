//! Inner problem for the boundary dislocation near `c_x = k_y = 0`.
//!
//! On the line the unknown `ψ = ψ_s + ψ̃`, `ψ_s = ψ_* + 2 arctan z`, solves
//!
//! ```text
//! D ψ̃ + R − g(ψ_s + ψ̃) + k_x = 0,   D = sqrt(−k̃_y² ∂_zz + k_x ∂_z),
//! ```
//!
//! with `R = D ψ_s` from [`crate::specfun`], the phase condition
//! `∫ ψ̃ e^{−z²} dz = 0` and `k_x` as Lagrange multiplier. The line is
//! truncated to the periodic grid `z_j = −L + 2Lj/M`.
//!
//! The base point `ψ_*` only fixes the translate picked by the phase
//! condition, so Newton keeps it frozen and the converged profile is rebased
//! onto `ψ_*(k_x)` afterwards. Below the delocalization transition no rising
//! root exists and `ψ_*` is frozen at `argmin g` (conjecture branch).

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::gmres::{gmres, GmresOptions};
use crate::model::ModelParams;
use crate::specfun::{line_symbol, spectral_kernel, KummerTable};

pub const DEFAULT_HALF_WIDTH: f64 = 1e4;
pub const DEFAULT_GRID: usize = 1 << 20;

/// How `R = D ψ_s` is evaluated on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    /// Closed form through tabulated Kummer U.
    Kummer,
    /// Fourier integral with exact low-frequency terms.
    Spectral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HetOptions {
    pub half_width: f64,
    pub grid: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub linear_tol: f64,
    pub restart: usize,
    pub linear_max_iter: usize,
    pub kernel: KernelSource,
    /// Fraction of the large-k̃_y slope plateau marking delocalization.
    pub slope_fraction: f64,
    /// Distance above `min g` marking the onset of the k_x plateau.
    pub plateau_tol: f64,
}

impl Default for HetOptions {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            grid: DEFAULT_GRID,
            newton_tol: 1e-9,
            newton_max: 30,
            linear_tol: 1e-6,
            restart: 40,
            linear_max_iter: 3000,
            kernel: KernelSource::Kummer,
            slope_fraction: 0.2,
            plateau_tol: 2e-3,
        }
    }
}

impl HetOptions {
    pub fn with_grid(mut self, half_width: f64, grid: usize) -> Self {
        self.half_width = half_width;
        self.grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.grid < 16 || !self.grid.is_multiple_of(2) {
            return Err(Error::InvalidParams(
                "line grid needs L > 0 and even M >= 16".into(),
            ));
        }
        if !(self.newton_tol > 0.0 && self.linear_tol > 0.0) || self.restart == 0 {
            return Err(Error::InvalidParams(
                "invalid inner solver tolerances".into(),
            ));
        }
        Ok(())
    }
}

/// Heteroclinic correction `ψ̃` on the truncated line grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HetProfile {
    pub half_width: f64,
    pub psi_tilde: Vec<f64>,
    pub psi_star: f64,
    pub k_x: f64,
    pub k_tilde: f64,
    /// Base point frozen at `argmin g` below the transition.
    pub conjecture: bool,
}

impl HetProfile {
    pub fn grid_len(&self) -> usize {
        self.psi_tilde.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.grid_len() as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..self.grid_len()).map(|j| self.z(j)).collect()
    }

    /// `ψ_s(z_j)`.
    pub fn base(&self) -> Vec<f64> {
        (0..self.grid_len())
            .map(|j| self.psi_star + 2.0 * self.z(j).atan())
            .collect()
    }

    /// Total profile `ψ_s + ψ̃`.
    pub fn total(&self) -> Vec<f64> {
        self.base()
            .iter()
            .zip(&self.psi_tilde)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// `∂_z ψ` on the grid: exact for `ψ_s`, spectral for `ψ̃`.
    pub fn slope(&self) -> Vec<f64> {
        let m = self.grid_len();
        let dxi = PI / self.half_width;
        let mut c = fft::forward(&self.psi_tilde);
        for (l, v) in c.iter_mut().enumerate() {
            *v *= Complex64::new(0.0, l as f64 * dxi);
        }
        fft::inverse(&c, m)
            .into_iter()
            .enumerate()
            .map(|(j, d)| d + 2.0 / (1.0 + self.z(j).powi(2)))
            .collect()
    }

    /// `k̃_y max ∂_z ψ`, the slope in the unscaled transverse variable.
    pub fn max_slope(&self) -> f64 {
        self.k_tilde * self.slope().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.slope().iter().all(|s| *s > 0.0)
    }

    /// Distances of `ψ(−L)` and `ψ(L − h)` from the far-field equilibrium
    /// `π − ψ_*` (mod 2π).
    pub fn tail_amplitudes(&self) -> (f64, f64) {
        let far = PI - self.psi_star;
        let dist = |v: f64| {
            let d = (v - far).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        let t = self.total();
        (dist(t[0]), dist(t[t.len() - 1]))
    }

    /// Power-law exponent of `|ψ − ψ_∞|` fitted between `z = ±a` and `±b`
    /// on each side: (left, right).
    pub fn tail_exponents(&self, a: f64, b: f64) -> (f64, f64) {
        let far = PI - self.psi_star;
        let t = self.total();
        let h = self.spacing();
        let at = |z: f64| {
            let j = ((z + self.half_width) / h).round() as usize;
            let d = (t[j.min(t.len() - 1)] - far).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        };
        let slope =
            |za: f64, zb: f64| (at(zb).ln() - at(za).ln()) / (zb.abs().ln() - za.abs().ln());
        (slope(-a, -b), slope(a, b))
    }

    /// Write `(z, ψ̃, ψ)` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z,psi_tilde,psi")?;
        let total = self.total();
        for (j, (pt, ps)) in self.psi_tilde.iter().zip(&total).enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.z(j), pt, ps)?;
        }
        Ok(())
    }

    /// Large-k̃_y guess: the Peierls profile `2 arctan(κ z/k̃_y)` at `k_x = 1`,
    /// which solves `k̃_y|∂_z|ψ = κ sin ψ`.
    pub fn peierls(k_tilde: f64, p: &ModelParams, opts: &HetOptions) -> Result<Self> {
        opts.validate()?;
        if !(k_tilde > 0.0) {
            return Err(Error::InvalidParams("k_tilde must be positive".into()));
        }
        let kappa = p.kappa.abs().max(1e-12);
        let psi_star = if p.kappa > 0.0 {
            p.rising_root(1.0)?
        } else {
            0.0
        };
        let h = 2.0 * opts.half_width / opts.grid as f64;
        let psi_tilde = (0..opts.grid)
            .map(|j| {
                let z = -opts.half_width + j as f64 * h;
                2.0 * (kappa * z / k_tilde).atan() - 2.0 * z.atan()
            })
            .collect();
        Ok(Self {
            half_width: opts.half_width,
            psi_tilde,
            psi_star,
            k_x: 1.0,
            k_tilde,
            conjecture: false,
        })
    }

    /// Same total profile on a different grid (linear interpolation of `ψ̃`,
    /// constant extension outside the old domain).
    pub fn regrid(&self, half_width: f64, grid: usize) -> Self {
        let old_h = self.spacing();
        let n = self.grid_len();
        let h = 2.0 * half_width / grid as f64;
        let psi_tilde = (0..grid)
            .map(|j| {
                let z = -half_width + j as f64 * h;
                let t = (z + self.half_width) / old_h;
                if t <= 0.0 {
                    self.psi_tilde[0]
                } else if t >= (n - 1) as f64 {
                    self.psi_tilde[n - 1]
                } else {
                    let i = t.floor() as usize;
                    let s = t - i as f64;
                    self.psi_tilde[i] * (1.0 - s) + self.psi_tilde[i + 1] * s
                }
            })
            .collect();
        Self {
            half_width,
            psi_tilde,
            ..self.clone()
        }
    }
}

/// Line operator data for fixed `(k_x, k̃_y)` on a fixed grid.
struct LineOperator {
    k_x: f64,
    m: usize,
    symbol: Vec<Complex64>,
    symbol_dk: Vec<Complex64>,
    r: Vec<f64>,
    r_dk: Vec<f64>,
    weight: Vec<f64>,
}

impl LineOperator {
    fn new(
        k_x: f64,
        k_tilde: f64,
        half_width: f64,
        m: usize,
        kernel: KernelSource,
    ) -> Result<Self> {
        if !(k_x > 0.0 && k_tilde > 0.0) {
            return Err(Error::InvalidParams(
                "line operator needs k_x > 0 and k_tilde > 0".into(),
            ));
        }
        let dxi = PI / half_width;
        let symbol: Vec<Complex64> = (0..=m / 2)
            .map(|l| line_symbol(l as f64 * dxi, k_x, k_tilde))
            .collect();
        let symbol_dk = symbol
            .iter()
            .enumerate()
            .map(|(l, s)| {
                if l == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, l as f64 * dxi) / (2.0 * s)
                }
            })
            .collect();
        let h = 2.0 * half_width / m as f64;
        let (r, r_dk) = match kernel {
            KernelSource::Kummer => {
                let table = KummerTable::new(k_x, k_tilde, half_width * 1.001)?;
                let pairs = (0..m)
                    .into_par_iter()
                    .map(|j| table.kernel_and_kx_derivative(-half_width + j as f64 * h))
                    .collect::<Result<Vec<_>>>()?;
                pairs.into_iter().unzip()
            }
            KernelSource::Spectral => {
                let r = spectral_kernel(half_width, m, k_x, k_tilde)?;
                let d = 1e-6 * k_x;
                let up = spectral_kernel(half_width, m, k_x + d, k_tilde)?;
                let dn = spectral_kernel(half_width, m, k_x - d, k_tilde)?;
                let r_dk = up
                    .iter()
                    .zip(&dn)
                    .map(|(a, b)| (a - b) / (2.0 * d))
                    .collect();
                (r, r_dk)
            }
        };
        let weight = (0..m)
            .map(|j| {
                let z = -half_width + j as f64 * h;
                h * (-z * z).exp()
            })
            .collect();
        Ok(Self {
            k_x,
            m,
            symbol,
            symbol_dk,
            r,
            r_dk,
            weight,
        })
    }

    fn apply_symbol(&self, v: &[f64], sym: &[Complex64]) -> Vec<f64> {
        let mut c = fft::forward(v);
        for (a, s) in c.iter_mut().zip(sym) {
            *a *= s;
        }
        // keep the Nyquist mode real
        let last = c.len() - 1;
        c[last] *= sym[last].re / sym[last];
        fft::inverse(&c, self.m)
    }

    fn phase(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weight).map(|(a, b)| a * b).sum()
    }

    fn residual(&self, prof: &HetProfile, p: &ModelParams) -> (Vec<f64>, f64) {
        let dpsi = self.apply_symbol(&prof.psi_tilde, &self.symbol);
        let h = prof.spacing();
        let f = (0..self.m)
            .map(|j| {
                let z = -prof.half_width + j as f64 * h;
                let psi = prof.psi_star + 2.0 * z.atan() + prof.psi_tilde[j];
                dpsi[j] + self.r[j] - p.flux(psi) + self.k_x
            })
            .collect();
        (f, self.phase(&prof.psi_tilde))
    }
}

/// Grid residual and phase functional of a profile.
pub fn inner_residual(
    prof: &HetProfile,
    p: &ModelParams,
    opts: &HetOptions,
) -> Result<(Vec<f64>, f64)> {
    let op = LineOperator::new(
        prof.k_x,
        prof.k_tilde,
        prof.half_width,
        prof.grid_len(),
        opts.kernel,
    )?;
    let (f, ph) = op.residual(prof, p);
    if !f.iter().all(|v| v.is_finite()) || !ph.is_finite() {
        return Err(Error::NonfiniteResidual);
    }
    Ok((f, ph))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

fn merit(f: &[f64], ph: f64, h: f64) -> f64 {
    (f.iter().map(|v| v * v).sum::<f64>() * h + ph * ph).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HetSolution {
    pub profile: HetProfile,
    pub residual_inf: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
}

/// Bordered Newton-GMRES with `ψ_*` frozen.
fn newton(
    prof: &mut HetProfile,
    p: &ModelParams,
    opts: &HetOptions,
) -> Result<(f64, usize, usize)> {
    let m = prof.grid_len();
    let h = prof.spacing();
    let zs = prof.zs();
    let mut op = LineOperator::new(prof.k_x, prof.k_tilde, prof.half_width, m, opts.kernel)?;
    let (mut f, mut ph) = op.residual(prof, p);
    let mut lin_total = 0;
    for it in 0..=opts.newton_max {
        if !f.iter().all(|v| v.is_finite()) || !ph.is_finite() {
            return Err(Error::NonfiniteResidual);
        }
        let res = sup(&f).max(ph.abs());
        log::debug!(
            "inner newton {it}: k_x = {:.12}, residual {res:.3e}",
            prof.k_x
        );
        if res <= opts.newton_tol {
            return Ok((res, it, lin_total));
        }
        if it == opts.newton_max {
            break;
        }
        let gp: Vec<f64> = (0..m)
            .map(|j| p.flux_deriv(prof.psi_star + 2.0 * zs[j].atan() + prof.psi_tilde[j]))
            .collect();
        let dk_dpsi = op.apply_symbol(&prof.psi_tilde, &op.symbol_dk);
        let kcol: Vec<f64> = (0..m).map(|j| dk_dpsi[j] + op.r_dk[j] + 1.0).collect();
        let gp_star = p.flux_deriv(prof.psi_star);
        let sigma = gp_star.max(0.05 * p.kappa.abs()).max(1e-3);
        let pre: Vec<Complex64> = op.symbol.iter().map(|s| 1.0 / (s + sigma)).collect();
        let apply = |x: &[f64], y: &mut [f64]| {
            let dv = op.apply_symbol(&x[..m], &op.symbol);
            let dk = x[m];
            for j in 0..m {
                y[j] = dv[j] - gp[j] * x[j] + dk * kcol[j];
            }
            y[m] = op.phase(&x[..m]);
        };
        let precond = |x: &[f64], y: &mut [f64]| {
            let v = op.apply_symbol(&x[..m], &pre);
            y[..m].copy_from_slice(&v);
            y[m] = x[m];
        };
        let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        rhs.push(-ph);
        let mut step = vec![0.0; m + 1];
        let gopts = GmresOptions {
            tol: opts.linear_tol,
            restart: opts.restart,
            max_iter: opts.linear_max_iter,
        };
        match gmres(apply, precond, &rhs, &mut step, &gopts) {
            Ok(stats) => lin_total += stats.iterations,
            Err(Error::LinearSolve {
                iterations,
                rel_residual,
            }) if rel_residual < 1e-2 => lin_total += iterations,
            Err(e) => return Err(e),
        }
        // backtracking on the residual norm
        let base = merit(&f, ph, h);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let k_new = prof.k_x + lambda * step[m];
            if k_new > 0.0 {
                let mut trial = prof.clone();
                trial.k_x = k_new;
                for (a, d) in trial.psi_tilde.iter_mut().zip(&step) {
                    *a += lambda * d;
                }
                let top = LineOperator::new(k_new, prof.k_tilde, prof.half_width, m, opts.kernel)?;
                let (ft, pt) = top.residual(&trial, p);
                let mt = merit(&ft, pt, h);
                if mt.is_finite() && mt <= (1.0 - 1e-4 * lambda) * base {
                    *prof = trial;
                    op = top;
                    f = ft;
                    ph = pt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::Divergence {
        iterations: opts.newton_max,
        residual: sup(&f).max(ph.abs()),
        last: Box::new(crate::error::LastIterate {
            psi: None,
            k_x: prof.k_x,
        }),
    })
}

/// Base point for `k_x`: the rising root, or `argmin g` when none exists.
fn base_point(k_x: f64, p: &ModelParams) -> (f64, bool) {
    match p.rising_root(k_x) {
        Ok(s) if p.flux_deriv(s) > 1e-8 => (s, false),
        _ => (argmin_flux(p), true),
    }
}

fn argmin_flux(p: &ModelParams) -> f64 {
    if p.is_sinusoidal() {
        return if p.kappa >= 0.0 { -PI / 2.0 } else { PI / 2.0 };
    }
    let n = 4096;
    (0..n)
        .map(|j| -PI + 2.0 * PI * j as f64 / n as f64)
        .min_by(|a, b| p.flux(*a).total_cmp(&p.flux(*b)))
        .unwrap_or(0.0)
}

/// Move `ψ_*` to `target` keeping the total profile.
fn rebase(prof: &mut HetProfile, target: f64) {
    let d = prof.psi_star - target;
    prof.psi_star = target;
    prof.psi_tilde.iter_mut().for_each(|v| *v += d);
}

/// Newton solve, then rebase onto the base point of the converged `k_x` and
/// re-solve for the phase condition. Below the transition the base point is
/// frozen at `argmin g` and the profile is flagged as conjectural.
pub fn inner_solve_any(
    guess: &HetProfile,
    p: &ModelParams,
    opts: &HetOptions,
) -> Result<HetSolution> {
    opts.validate()?;
    p.validate()?;
    if guess.grid_len() != opts.grid {
        return Err(Error::DiscretizationMismatch {
            expected: opts.grid,
            got: guess.grid_len(),
        });
    }
    if !guess.psi_tilde.iter().all(|v| v.is_finite()) {
        return Err(Error::NonfiniteResidual);
    }
    if p.kappa == 0.0 {
        return flat_solution(guess, opts);
    }
    let mut prof = guess.clone();
    let (mut res, mut iters, mut lin) = newton(&mut prof, p, opts)?;
    let (target, conj) = base_point(prof.k_x, p);
    prof.conjecture = conj;
    if (target - prof.psi_star).abs() > 1e-12 {
        rebase(&mut prof, target);
        let (r2, i2, l2) = newton(&mut prof, p, opts)?;
        res = r2;
        iters += i2;
        lin += l2;
        let (t2, c2) = base_point(prof.k_x, p);
        prof.conjecture = c2;
        if (t2 - prof.psi_star).abs() > 1e-6 && !c2 {
            rebase(&mut prof, t2);
            let (r3, i3, l3) = newton(&mut prof, p, opts)?;
            res = r3;
            iters += i3;
            lin += l3;
        }
    }
    Ok(HetSolution {
        profile: prof,
        residual_inf: res,
        newton_iters: iters,
        linear_iters: lin,
    })
}

/// [`inner_solve_any`] restricted to the regime with a rising base point;
/// a converged `k_x` at or below `min g` is reported as a base-point error.
pub fn inner_solve(guess: &HetProfile, p: &ModelParams, opts: &HetOptions) -> Result<HetSolution> {
    let sol = inner_solve_any(guess, p, opts)?;
    if sol.profile.conjecture {
        return Err(Error::BasePoint {
            k_x: sol.profile.k_x,
        });
    }
    Ok(sol)
}

/// κ = 0: `g ≡ 1`, `k_x = 1` and `ψ̃` solves `D ψ̃ = −(R − ⟨R⟩)` spectrally.
/// The grid mean `⟨R⟩` of the slowly decaying kernel is a truncation effect.
fn flat_solution(guess: &HetProfile, opts: &HetOptions) -> Result<HetSolution> {
    let m = guess.grid_len();
    let op = LineOperator::new(1.0, guess.k_tilde, guess.half_width, m, opts.kernel)?;
    let mut c = fft::forward(&op.r);
    c[0] = Complex64::new(0.0, 0.0);
    let last = c.len() - 1;
    for (l, v) in c.iter_mut().enumerate().skip(1) {
        let s = if l == last {
            Complex64::new(op.symbol[l].re, 0.0)
        } else {
            op.symbol[l]
        };
        *v = -*v / s;
    }
    let mut psi_tilde = fft::inverse(&c, m);
    let shift = op.phase(&psi_tilde) / op.weight.iter().sum::<f64>();
    psi_tilde.iter_mut().for_each(|v| *v -= shift);
    let prof = HetProfile {
        psi_tilde,
        psi_star: 0.0,
        k_x: 1.0,
        conjecture: false,
        ..guess.clone()
    };
    let (f, ph) = op.residual(&prof, &ModelParams::new(0.0, 1.0, 0.0)?);
    let mean = f.iter().sum::<f64>() / m as f64;
    let res = f.iter().map(|v| (v - mean).abs()).fold(ph.abs(), f64::max);
    Ok(HetSolution {
        profile: prof,
        residual_inf: res,
        newton_iters: 0,
        linear_iters: 0,
    })
}

/// One sample of the glide curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlidePoint {
    pub k_tilde: f64,
    pub k_x: f64,
    pub max_slope: f64,
    pub tail_left: f64,
    pub tail_right: f64,
    pub conjecture: bool,
}

impl GlidePoint {
    pub fn from_solution(sol: &HetSolution) -> Self {
        let (tail_left, tail_right) = sol.profile.tail_amplitudes();
        Self {
            k_tilde: sol.profile.k_tilde,
            k_x: sol.profile.k_x,
            max_slope: sol.profile.max_slope(),
            tail_left,
            tail_right,
            conjecture: sol.profile.conjecture,
        }
    }

    /// Traveling-wave speed `c = k_x/k̃_y` of the equivalent boundary-flux
    /// heat equation.
    pub fn wave_speed(&self) -> f64 {
        self.k_x / self.k_tilde
    }
}

/// Two estimates of the delocalization point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Transition {
    /// Where `k̃_y max ∂_zψ` drops below the configured fraction of its
    /// large-k̃_y value.
    pub slope_estimate: f64,
    /// Where `k_x` reaches `min g + plateau_tol`.
    pub plateau_estimate: f64,
    pub slope_plateau: f64,
}

impl Transition {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.slope_estimate + self.plateau_estimate)
    }

    pub fn relative_disagreement(&self) -> f64 {
        (self.slope_estimate - self.plateau_estimate).abs() / self.estimate()
    }
}

/// `(k̃_y, k_x)` samples sorted by increasing `k̃_y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlideCurve {
    pub kappa: f64,
    pub min_flux: f64,
    pub points: Vec<GlidePoint>,
    pub truncated: bool,
    pub transition: Option<Transition>,
}

impl GlideCurve {
    pub fn new(p: &ModelParams, mut points: Vec<GlidePoint>, truncated: bool) -> Self {
        points.sort_by(|a, b| a.k_tilde.total_cmp(&b.k_tilde));
        Self {
            kappa: p.kappa,
            min_flux: p.flux_range().0,
            points,
            truncated,
            transition: None,
        }
    }

    /// Linear interpolation of `k_x` in `k̃_y`.
    pub fn interpolate(&self, k_tilde: f64) -> Result<f64> {
        let pts = &self.points;
        if pts.is_empty() || k_tilde < pts[0].k_tilde || k_tilde > pts[pts.len() - 1].k_tilde {
            return Err(Error::Extrapolation(k_tilde));
        }
        let i = pts.partition_point(|q| q.k_tilde < k_tilde);
        if i == 0 {
            return Ok(pts[0].k_x);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let s = (k_tilde - a.k_tilde) / (b.k_tilde - a.k_tilde);
        Ok(a.k_x + s * (b.k_x - a.k_x))
    }

    /// Write `(k̃_y, k_x, max_slope, tail_left, tail_right)` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k_tilde,k_x,max_slope,tail_left,tail_right")?;
        for q in &self.points {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                q.k_tilde, q.k_x, q.max_slope, q.tail_left, q.tail_right
            )?;
        }
        Ok(())
    }
}

/// Step control for [`continue_glide`], in `log k̃_y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlideOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub grow: f64,
    pub shrink: f64,
    pub fast_newton: usize,
}

impl Default for GlideOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-2,
            max_step: 0.2,
            grow: 1.5,
            shrink: 0.5,
            fast_newton: 6,
        }
    }
}

/// Secant continuation in `log k̃_y` from a converged solution to `target`.
///
/// The predictor extrapolates the total profile and `k_x`; the base point is
/// recomputed from the predicted `k_x`. Points below the transition carry the
/// conjecture flag. Step underflow truncates the curve.
pub fn continue_glide(
    start: &HetSolution,
    target: f64,
    p: &ModelParams,
    opts: &HetOptions,
    gopts: &GlideOptions,
) -> Result<(GlideCurve, Vec<HetSolution>)> {
    if !(target > 0.0) {
        return Err(Error::InvalidParams(
            "target k_tilde must be positive".into(),
        ));
    }
    let dir = if target < start.profile.k_tilde {
        -1.0
    } else {
        1.0
    };
    let log_target = target.ln();
    let mut sols = vec![start.clone()];
    let mut step = gopts.initial_step;
    let mut truncated = false;
    loop {
        let last = &sols[sols.len() - 1].profile;
        let lt = last.k_tilde.ln();
        if (log_target - lt) * dir <= 1e-12 {
            break;
        }
        let next_lt = if (log_target - lt) * dir < step {
            log_target
        } else {
            lt + dir * step
        };
        let guess = predict(&sols, next_lt, p);
        match inner_solve_any(&guess, p, opts) {
            Ok(sol) => {
                log::info!(
                    "glide: k_tilde = {:.6}, k_x = {:.10}, newton {}, conjecture {}",
                    sol.profile.k_tilde,
                    sol.profile.k_x,
                    sol.newton_iters,
                    sol.profile.conjecture
                );
                if sol.newton_iters <= gopts.fast_newton {
                    step = (step * gopts.grow).min(gopts.max_step);
                }
                sols.push(sol);
            }
            Err(e) => {
                log::info!("glide: step {step:.3e} failed at {:.6}: {e}", next_lt.exp());
                step *= gopts.shrink;
                if step < gopts.min_step {
                    truncated = true;
                    break;
                }
            }
        }
    }
    let points = sols.iter().map(GlidePoint::from_solution).collect();
    Ok((GlideCurve::new(p, points, truncated), sols))
}

fn predict(sols: &[HetSolution], log_kt: f64, p: &ModelParams) -> HetProfile {
    let last = &sols[sols.len() - 1].profile;
    let kt = log_kt.exp();
    let (total, k_x) = if sols.len() >= 2 {
        let prev = &sols[sols.len() - 2].profile;
        let (l1, l0) = (last.k_tilde.ln(), prev.k_tilde.ln());
        let s = (log_kt - l1) / (l1 - l0);
        let (t1, t0) = (last.total(), prev.total());
        let total: Vec<f64> = t1.iter().zip(&t0).map(|(a, b)| a + s * (a - b)).collect();
        (total, last.k_x + s * (last.k_x - prev.k_x))
    } else {
        (last.total(), last.k_x)
    };
    let (psi_star, conjecture) = base_point(k_x, p);
    let mut prof = HetProfile {
        psi_tilde: vec![],
        psi_star,
        k_x,
        k_tilde: kt,
        conjecture,
        ..last.clone()
    };
    let base = (0..total.len()).map(|j| psi_star + 2.0 * last.z(j).atan());
    prof.psi_tilde = total.iter().zip(base).map(|(t, b)| t - b).collect();
    prof
}

/// Locate the delocalization transition on a curve spanning both regimes.
pub fn detect_delocalization(curve: &GlideCurve, opts: &HetOptions) -> Result<Transition> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(Error::NotBracketed(
            "glide curve has fewer than 3 points".into(),
        ));
    }
    let top = &pts[pts.len() - 1];
    let threshold = opts.slope_fraction * top.max_slope;
    let crossing = |value: &dyn Fn(&GlidePoint) -> f64, level: f64| -> Option<f64> {
        // scan downwards in k̃_y for the first drop below `level`
        (1..pts.len()).rev().find_map(|i| {
            let (a, b) = (&pts[i - 1], &pts[i]);
            let (va, vb) = (value(a), value(b));
            (vb > level && va <= level)
                .then(|| a.k_tilde + (level - va) / (vb - va) * (b.k_tilde - a.k_tilde))
        })
    };
    let slope = crossing(&|q: &GlidePoint| q.max_slope, threshold)
        .ok_or_else(|| Error::NotBracketed("max slope does not drop below the threshold".into()))?;
    let level = curve.min_flux + opts.plateau_tol;
    let plateau = crossing(&|q: &GlidePoint| q.k_x, level)
        .ok_or_else(|| Error::NotBracketed("k_x does not reach the plateau".into()))?;
    Ok(Transition {
        slope_estimate: slope,
        plateau_estimate: plateau,
        slope_plateau: top.max_slope,
    })
}

/// Leading-order inner prediction `k_x^f(k_y/c_x)`, equal to `min g` below
/// the transition.
pub fn near_origin_prediction(c_x: f64, k_y: f64, curve: &GlideCurve) -> Result<f64> {
    if !(c_x > 0.0 && k_y >= 0.0) {
        return Err(Error::InvalidParams(
            "near-origin prediction needs c_x > 0, k_y >= 0".into(),
        ));
    }
    let kt = k_y / c_x;
    if let Some(t) = &curve.transition {
        if kt <= t.estimate() {
            return Ok(curve.min_flux);
        }
    }
    match curve.points.first() {
        Some(first) if kt < first.k_tilde => Ok(curve.min_flux),
        _ => curve.interpolate(kt),
    }
}
