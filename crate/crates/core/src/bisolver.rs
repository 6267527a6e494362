//! Bordered Newton-Krylov solver for the periodic boundary-integral equation
//!
//! ```text
//! D_+ ψ − g(ψ + ζ) + k_x = 0,      ∫ ψ(ζ) e^{−ζ²/δ} dζ = 0,
//! ```
//!
//! with unknowns the Fourier modes of ψ and the Lagrange multiplier k_x.
//! Unknowns and equations share a packed real layout
//! `[Re ψ_0, Re ψ_1, Im ψ_1, …, Re ψ_{N/2−1}, Im ψ_{N/2−1}, k_x]` of length N.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LastIterate, Result};
use crate::fft;
use crate::gmres::{gmres, GmresOptions};
use crate::model::ModelParams;
use crate::multiplier::{plus_symbol_derivatives, plus_symbols};
use crate::profile::{centered, grid, PeriodicProfile};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target sup-norm of the residual.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Relative tolerance of the inner Krylov solve.
    pub linear_tol: f64,
    pub linear_restart: usize,
    /// Cap on Krylov iterations per linear solve.
    pub linear_max_iter: usize,
    /// Budget, in f64 entries, for the stored Krylov basis; limits the restart
    /// length at large N.
    pub krylov_memory: usize,
    /// Width δ of the phase-condition weight `e^{−ζ²/δ}`.
    pub phase_delta: f64,
    /// Largest admissible coefficient magnitude in the top decile of modes.
    pub tail_tol: f64,
    /// Smallest mode count chosen by [`adapt_modes`].
    pub min_modes: usize,
    /// Largest mode count chosen by [`adapt_modes`].
    pub max_modes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_max: 25,
            linear_tol: 1e-8,
            linear_restart: 200,
            linear_max_iter: 4000,
            krylov_memory: 1 << 25,
            phase_delta: 1.0,
            tail_tol: 1e-10,
            min_modes: 64,
            max_modes: 1 << 22,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.newton_tol,
            self.linear_tol,
            self.phase_delta,
            self.tail_tol,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.newton_max == 0 || self.linear_restart == 0
        {
            return Err(Error::InvalidParams(
                "solver tolerances must be positive and iteration caps at least 1".into(),
            ));
        }
        Ok(())
    }

    fn gmres_options(&self, n: usize) -> GmresOptions {
        let restart = self
            .linear_restart
            .min((self.krylov_memory / n.max(1)).max(20));
        GmresOptions {
            tol: self.linear_tol,
            restart,
            max_iter: self.linear_max_iter,
        }
    }
}

/// A converged solution with diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub params: ModelParams,
    pub psi: PeriodicProfile,
    pub k_x: f64,
    /// Sup-norm of the boundary residual and the phase residual.
    pub residual_inf: f64,
    pub newton_iters: usize,
    pub linear_iters: usize,
    /// `min_ζ (ψ' + 1)`.
    pub monotonicity_margin: f64,
    /// Transverse drift `c_y = −k_x c_x / k_y`; `None` at k_y = 0.
    pub c_y: Option<f64>,
    /// Stripe creation frequency `ω = c_x k_x`.
    pub omega: f64,
}

impl SolveResult {
    pub fn n_modes(&self) -> usize {
        self.psi.n_modes()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_margin > 0.0
    }

    fn assemble(
        params: &ModelParams,
        psi: PeriodicProfile,
        k_x: f64,
        residual_inf: f64,
        newton_iters: usize,
        linear_iters: usize,
    ) -> Self {
        let slope = psi.derivative().sample(2 * psi.n_modes());
        let margin = slope.iter().fold(f64::INFINITY, |m, v| m.min(v + 1.0));
        let c_y = if params.k_y > 0.0 {
            Some(-k_x * params.c_x / params.k_y)
        } else {
            None
        };
        Self {
            params: params.clone(),
            psi,
            k_x,
            residual_inf,
            newton_iters,
            linear_iters,
            monotonicity_margin: margin,
            c_y,
            omega: params.c_x * k_x,
        }
    }
}

/// Length of the dealiased grid for N modes.
pub fn fine_len(n_modes: usize) -> usize {
    let nf = (3 * n_modes).div_ceil(2);
    nf + nf % 2
}

pub(crate) fn pack(coeffs: &[Complex64], k: f64, out: &mut [f64]) {
    out[0] = coeffs[0].re;
    for (l, c) in coeffs.iter().enumerate().skip(1) {
        out[2 * l - 1] = c.re;
        out[2 * l] = c.im;
    }
    let n = out.len();
    out[n - 1] = k;
}

pub(crate) fn unpack(x: &[f64], coeffs: &mut [Complex64]) -> f64 {
    coeffs[0] = Complex64::new(x[0], 0.0);
    for l in 1..coeffs.len() {
        coeffs[l] = Complex64::new(x[2 * l - 1], x[2 * l]);
    }
    x[x.len() - 1]
}

fn to_fine(coeffs: &[Complex64], nf: usize) -> Vec<f64> {
    fft::inverse(&fft::resize_half_spectrum(coeffs, nf), nf)
}

fn from_fine(vals: &[f64], half: usize) -> Vec<Complex64> {
    let mut c = fft::forward(vals);
    c.truncate(half);
    c[0].im = 0.0;
    c
}

/// Fourier coefficients of the periodized weight `e^{−ζ²/δ}` on N points,
/// scaled by 2π so that the phase functional is a plain pairing.
fn phase_weight(n: usize, delta: f64) -> Vec<Complex64> {
    let w: Vec<f64> = grid(n)
        .iter()
        .map(|z| {
            let c = centered(*z);
            TAU * (-c * c / delta).exp()
        })
        .collect();
    let mut c = fft::forward(&w);
    c.truncate(n / 2);
    c
}

/// `Σ_ℓ a_ℓ conj(b_ℓ)` over the full conjugate-symmetric band.
fn pair(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut s = a[0].re * b[0].re;
    for (x, y) in a.iter().zip(b).skip(1) {
        s += 2.0 * (x * y.conj()).re;
    }
    s
}

fn sup_physical(coeffs: &[Complex64], n: usize) -> f64 {
    fft::inverse(&fft::resize_half_spectrum(coeffs, n), n)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Discretized bordered problem at a fixed mode count.
pub(crate) struct Bordered<'a> {
    pub p: &'a ModelParams,
    pub n: usize,
    pub nf: usize,
    pub weight: Vec<Complex64>,
    fine_zeta: Vec<f64>,
}

/// Linearization data at a point `(ψ, k_x)`.
pub(crate) struct Linearization {
    pub nu: Vec<Complex64>,
    /// `1 + D_+'(k_x)ψ` in spectral form.
    pub k_column: Vec<Complex64>,
    /// `g'(ψ + ζ)` on the fine grid.
    pub gprime: Vec<f64>,
}

impl<'a> Bordered<'a> {
    pub fn new(p: &'a ModelParams, n: usize, delta: f64) -> Result<Self> {
        p.validate()?;
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("mode count {n} must be even")));
        }
        let nf = fine_len(n);
        Ok(Self {
            p,
            n,
            nf,
            weight: phase_weight(n, delta),
            fine_zeta: grid(nf),
        })
    }

    fn check(&self, psi: &PeriodicProfile) -> Result<()> {
        if psi.n_modes() != self.n {
            return Err(Error::DiscretizationMismatch {
                expected: self.n,
                got: psi.n_modes(),
            });
        }
        Ok(())
    }

    /// Spectral residual and phase residual.
    pub fn residual(&self, coeffs: &[Complex64], k: f64) -> Result<(Vec<Complex64>, f64)> {
        let nu = plus_symbols(self.n, k, self.p.c_x, self.p.k_y);
        let phys = to_fine(coeffs, self.nf);
        let gv: Vec<f64> = phys
            .iter()
            .zip(&self.fine_zeta)
            .map(|(v, z)| self.p.flux(v + z))
            .collect();
        if gv.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonfiniteResidual);
        }
        let gc = from_fine(&gv, self.n / 2);
        let mut r: Vec<Complex64> = coeffs
            .iter()
            .zip(&nu)
            .zip(&gc)
            .map(|((c, s), g)| s * c - g)
            .collect();
        r[0] += k;
        if r.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonfiniteResidual);
        }
        Ok((r, pair(coeffs, &self.weight)))
    }

    pub fn residual_inf(&self, r: &[Complex64], phase: f64) -> f64 {
        sup_physical(r, self.n).max(phase.abs())
    }

    pub fn linearize(&self, coeffs: &[Complex64], k: f64) -> Linearization {
        let nu = plus_symbols(self.n, k, self.p.c_x, self.p.k_y);
        let dnu = plus_symbol_derivatives(self.n, k, self.p.c_x, self.p.k_y);
        let mut k_column: Vec<Complex64> = coeffs.iter().zip(&dnu).map(|(c, d)| c * d).collect();
        k_column[0] += 1.0;
        let phys = to_fine(coeffs, self.nf);
        let gprime = phys
            .iter()
            .zip(&self.fine_zeta)
            .map(|(v, z)| self.p.flux_deriv(v + z))
            .collect();
        Linearization {
            nu,
            k_column,
            gprime,
        }
    }

    /// `P(g' · u)` for spectral `u`.
    fn multiply_gprime(&self, lin: &Linearization, u: &[Complex64]) -> Vec<Complex64> {
        let mut phys = to_fine(u, self.nf);
        phys.iter_mut().zip(&lin.gprime).for_each(|(a, b)| *a *= b);
        from_fine(&phys, self.n / 2)
    }

    /// Jacobian applied to `(du, dk)` in spectral form.
    pub fn jacobian(
        &self,
        lin: &Linearization,
        du: &[Complex64],
        dk: f64,
    ) -> (Vec<Complex64>, f64) {
        let gu = self.multiply_gprime(lin, du);
        let out = du
            .iter()
            .zip(&lin.nu)
            .zip(&gu)
            .zip(&lin.k_column)
            .map(|(((u, s), g), kc)| s * u - g + kc * dk)
            .collect();
        (out, pair(du, &self.weight))
    }

    /// Transposed linearization `D_+(−∂_ζ)v − g'v` without the k_x column.
    pub fn adjoint_operator(&self, lin: &Linearization, v: &[Complex64]) -> Vec<Complex64> {
        let gv = self.multiply_gprime(lin, v);
        v.iter()
            .zip(&lin.nu)
            .zip(&gv)
            .map(|((u, s), g)| s.conj() * u - g)
            .collect()
    }

    /// Operator `L` (no k_x column) applied to `v`.
    pub fn forward_operator(&self, lin: &Linearization, v: &[Complex64]) -> Vec<Complex64> {
        let gv = self.multiply_gprime(lin, v);
        v.iter()
            .zip(&lin.nu)
            .zip(&gv)
            .map(|((u, s), g)| s * u - g)
            .collect()
    }

    /// Diagonal preconditioner `(1 + ν)^{-1}` (or its conjugate) on packed vectors.
    fn precondition(nu: &[Complex64], conjugate: bool, x: &[f64], out: &mut [f64]) {
        out[0] = x[0];
        for l in 1..nu.len() {
            let s = if conjugate { nu[l].conj() } else { nu[l] };
            let z = Complex64::new(x[2 * l - 1], x[2 * l]) / (1.0 + s);
            out[2 * l - 1] = z.re;
            out[2 * l] = z.im;
        }
        let n = out.len();
        out[n - 1] = x[n - 1];
    }
}

/// Residual of the boundary-integral equation with the default phase width.
pub fn residual(
    psi: &PeriodicProfile,
    k_x: f64,
    p: &ModelParams,
) -> Result<(PeriodicProfile, f64)> {
    residual_with(psi, k_x, p, SolverOptions::default().phase_delta)
}

/// Residual of the boundary-integral equation and the phase functional.
pub fn residual_with(
    psi: &PeriodicProfile,
    k_x: f64,
    p: &ModelParams,
    phase_delta: f64,
) -> Result<(PeriodicProfile, f64)> {
    let sys = Bordered::new(p, psi.n_modes(), phase_delta)?;
    sys.check(psi)?;
    let (r, ph) = sys.residual(psi.coeffs(), k_x)?;
    Ok((PeriodicProfile::from_coeffs(psi.n_modes(), r)?, ph))
}

/// Jacobian of [`residual`] at `(ψ, k_x)` applied to `(dψ, dk_x)`.
pub fn jacobian_apply(
    psi: &PeriodicProfile,
    k_x: f64,
    p: &ModelParams,
    dpsi: &PeriodicProfile,
    dk_x: f64,
) -> Result<(PeriodicProfile, f64)> {
    psi.check_same(dpsi)?;
    let sys = Bordered::new(p, psi.n_modes(), SolverOptions::default().phase_delta)?;
    let lin = sys.linearize(psi.coeffs(), k_x);
    let (r, ph) = sys.jacobian(&lin, dpsi.coeffs(), dk_x);
    Ok((PeriodicProfile::from_coeffs(psi.n_modes(), r)?, ph))
}

/// Solve for `(ψ, k_x)` by Newton's method with GMRES inner solves and a
/// backtracking line search on the residual 2-norm.
pub fn newton_solve(
    guess: (&PeriodicProfile, f64),
    p: &ModelParams,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let (psi0, k0) = guess;
    if !psi0.is_finite() || !k0.is_finite() {
        return Err(Error::InvalidParams("guess is not finite".into()));
    }
    let n = psi0.n_modes();
    let sys = Bordered::new(p, n, opts.phase_delta)?;
    let gopts = opts.gmres_options(n);

    let mut coeffs = psi0.coeffs().to_vec();
    let mut k = k0;
    let (mut r, mut ph) = sys.residual(&coeffs, k)?;
    let mut rinf = sys.residual_inf(&r, ph);
    let mut linear_iters = 0;
    let mut b = vec![0.0; n];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n / 2];
    let mut tmp_out = vec![0.0; n];

    for iter in 0..=opts.newton_max {
        if rinf <= opts.newton_tol {
            let psi = PeriodicProfile::from_coeffs(n, coeffs)?;
            let res = SolveResult::assemble(p, psi, k, rinf, iter, linear_iters);
            if !res.is_monotone() {
                log::warn!(
                    "solution at c_x = {}, k_y = {} is not monotone (margin {:.3e})",
                    p.c_x,
                    p.k_y,
                    res.monotonicity_margin
                );
            }
            return Ok(res);
        }
        if iter == opts.newton_max {
            break;
        }

        let lin = sys.linearize(&coeffs, k);
        pack(&r, ph, &mut b);
        b.iter_mut().for_each(|v| *v = -*v);
        let mut dx = vec![0.0; n];
        let stats = gmres(
            |x, out| {
                let dk = unpack(x, &mut tmp);
                let (jr, jp) = sys.jacobian(&lin, &tmp, dk);
                pack(&jr, jp, out);
            },
            |x, out| Bordered::precondition(&lin.nu, false, x, out),
            &b,
            &mut dx,
            &gopts,
        );
        let stats = match stats {
            Ok(s) => s,
            Err(Error::LinearSolve {
                iterations,
                rel_residual,
            }) if rel_residual < 1e-3 => {
                log::debug!("accepting inexact Newton step (rel {rel_residual:.2e})");
                crate::gmres::GmresStats {
                    iterations,
                    rel_residual,
                }
            }
            Err(e) => return Err(e),
        };
        linear_iters += stats.iterations;

        let mut dcoef = vec![Complex64::new(0.0, 0.0); n / 2];
        let dk = unpack(&dx, &mut dcoef);
        pack(&r, ph, &mut tmp_out);
        let merit0 = tmp_out.iter().map(|v| v * v).sum::<f64>().sqrt();

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..14 {
            let trial: Vec<Complex64> = coeffs
                .iter()
                .zip(&dcoef)
                .map(|(c, d)| c + d * lambda)
                .collect();
            let kt = k + lambda * dk;
            if let Ok((rt, pt)) = sys.residual(&trial, kt) {
                pack(&rt, pt, &mut tmp_out);
                let merit = tmp_out.iter().map(|v| v * v).sum::<f64>().sqrt();
                if merit < (1.0 - 1e-4 * lambda) * merit0 || merit == 0.0 {
                    accepted = Some((trial, kt, rt, pt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((c, kt, rt, pt)) => {
                coeffs = c;
                k = kt;
                r = rt;
                ph = pt;
                rinf = sys.residual_inf(&r, ph);
                log::trace!("newton {iter}: residual {rinf:.3e}, step {lambda}");
            }
            None => break,
        }
    }

    Err(Error::Divergence {
        iterations: opts.newton_max,
        residual: rinf,
        last: Box::new(LastIterate {
            psi: Some(PeriodicProfile::from_coeffs(n, coeffs)?),
            k_x: k,
        }),
    })
}

/// Recommended mode count from the tail amplitude of a converged profile.
pub fn adapt_modes(result: &SolveResult, opts: &SolverOptions) -> usize {
    let n = result.n_modes();
    let tail = result.psi.tail_amplitude();
    if tail > opts.tail_tol {
        (2 * n).min(opts.max_modes.max(n))
    } else if tail < opts.tail_tol * 1e-4 {
        (n / 2).max(opts.min_modes).min(n)
    } else {
        n
    }
}

fn adjoint_bordered_solve(
    sys: &Bordered,
    lin: &Linearization,
    border: &[Complex64],
    opts: &SolverOptions,
    max_iter: usize,
) -> Result<Vec<Complex64>> {
    let n = sys.n;
    let mut gopts = opts.gmres_options(n);
    gopts.max_iter = max_iter;
    gopts.tol = gopts.tol.min(1e-12);
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut x = vec![0.0; n];
    let mut tmp = vec![Complex64::new(0.0, 0.0); n / 2];
    gmres(
        |x, out| {
            let s = unpack(x, &mut tmp);
            let mut lt = sys.adjoint_operator(lin, &tmp);
            lt.iter_mut().zip(border).for_each(|(a, e)| *a += e * s);
            let nrm = pair(border, &tmp);
            pack(&lt, nrm, out);
        },
        |x, out| Bordered::precondition(&lin.nu, true, x, out),
        &b,
        &mut x,
        &gopts,
    )?;
    let mut v = vec![Complex64::new(0.0, 0.0); n / 2];
    unpack(&x, &mut v);
    Ok(v)
}

/// Null vector of the transposed linearization at a converged solution,
/// normalized by `⨍ ψ^ad (ψ' + 1) = 1`.
///
/// Solved as a bordered system; a second bordered solve with the border
/// orthogonal to the computed vector succeeds only if the null space has
/// dimension two or more, which is reported as degenerate.
pub fn adjoint_solve(
    base: &SolveResult,
    p: &ModelParams,
    opts: &SolverOptions,
) -> Result<PeriodicProfile> {
    let n = base.n_modes();
    let sys = Bordered::new(p, n, opts.phase_delta)?;
    let lin = sys.linearize(base.psi.coeffs(), base.k_x);
    let mut kernel = base.psi.derivative().coeffs().to_vec();
    kernel[0] += 1.0;

    let v = adjoint_bordered_solve(&sys, &lin, &kernel, opts, opts.linear_max_iter)?;

    // border orthogonal to v
    let vv = pair(&v, &v);
    let kv = pair(&kernel, &v);
    let e: Vec<Complex64> = kernel
        .iter()
        .zip(&v)
        .map(|(a, b)| a - b * (kv / vv))
        .collect();
    let e_norm = pair(&e, &e).sqrt();
    if e_norm > 1e-8 * pair(&kernel, &kernel).sqrt() {
        let probe = adjoint_bordered_solve(&sys, &lin, &e, opts, 3 * opts.gmres_options(n).restart);
        if let Ok(w) = probe {
            let resid = sys.adjoint_operator(&lin, &w);
            let r = sup_physical(&resid, n) / sup_physical(&w, n).max(1e-300);
            if r < 1e-6 {
                return Err(Error::DegenerateAdjoint(format!(
                    "second null vector with relative residual {r:.2e}"
                )));
            }
        }
    }
    PeriodicProfile::from_coeffs(n, v)
}

/// `D_+(−∂_ζ)v − g'(ψ + ζ)v` at a converged solution.
pub fn adjoint_apply(
    base: &SolveResult,
    p: &ModelParams,
    v: &PeriodicProfile,
) -> Result<PeriodicProfile> {
    base.psi.check_same(v)?;
    let sys = Bordered::new(p, base.n_modes(), SolverOptions::default().phase_delta)?;
    let lin = sys.linearize(base.psi.coeffs(), base.k_x);
    PeriodicProfile::from_coeffs(base.n_modes(), sys.adjoint_operator(&lin, v.coeffs()))
}

/// The linearization `D_+v − g'(ψ + ζ)v` at fixed k_x.
pub fn linear_apply(
    base: &SolveResult,
    p: &ModelParams,
    v: &PeriodicProfile,
) -> Result<PeriodicProfile> {
    base.psi.check_same(v)?;
    let sys = Bordered::new(p, base.n_modes(), SolverOptions::default().phase_delta)?;
    let lin = sys.linearize(base.psi.coeffs(), base.k_x);
    PeriodicProfile::from_coeffs(base.n_modes(), sys.forward_operator(&lin, v.coeffs()))
}

/// Phase field `φ(x, ζ_j)` on the collocation grid, one row per `x`.
pub fn reconstruct_field(
    result: &SolveResult,
    p: &ModelParams,
    x_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if let Some(x) = x_grid.iter().find(|x| !(**x <= 0.0)) {
        return Err(Error::PositiveX(*x));
    }
    let n = result.n_modes();
    let nu = plus_symbols(n, result.k_x, p.c_x, p.k_y);
    let zeta = grid(n);
    let rows = x_grid
        .iter()
        .map(|&x| {
            let c: Vec<Complex64> = result
                .psi
                .coeffs()
                .iter()
                .zip(&nu)
                .enumerate()
                .map(|(l, (c, s))| if l == 0 { *c } else { c * (s * x).exp() })
                .collect();
            let vals = fft::inverse(&fft::resize_half_spectrum(&c, n), n);
            vals.iter()
                .zip(&zeta)
                .map(|(v, z)| result.k_x * x + z + v)
                .collect()
        })
        .collect();
    Ok(rows)
}

/// Exact solution of the c_x = 0 problem by continuation in the flux amplitude.
///
/// At c_x = 0 the symbol is `k_y|ℓ|`, independent of k_x, and `k_x = ⨍ g`.
pub fn solve_cx_zero(p: &ModelParams, n_modes: usize, opts: &SolverOptions) -> Result<SolveResult> {
    if p.c_x != 0.0 {
        return Err(Error::InvalidParams(
            "solve_cx_zero requires c_x = 0".into(),
        ));
    }
    let guess = PeriodicProfile::zeros(n_modes)?;
    newton_solve((&guess, p.mean_flux()), p, opts)
}

/// Phase-condition value `∫ψ e^{−ζ²/δ}dζ` by trapezoid sum.
pub fn phase_functional(psi: &PeriodicProfile, delta: f64) -> f64 {
    let w = phase_weight(psi.n_modes(), delta);
    pair(psi.coeffs(), &w)
}

/// Mean identity check: `⨍ g(ψ + ζ)`.
pub fn mean_flux_along(psi: &PeriodicProfile, p: &ModelParams) -> f64 {
    let nf = fine_len(psi.n_modes());
    let phys = psi.sample(nf);
    let sum: f64 = phys
        .iter()
        .enumerate()
        .map(|(j, v)| p.flux(v + TAU * j as f64 / nf as f64))
        .sum();
    sum / nf as f64
}
