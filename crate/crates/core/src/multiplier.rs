//! The half-plane Dirichlet-to-Neumann symbols and diagonal multipliers.
//!
//! Mode ℓ of a bounded solution of the linearized far field decays like
//! `e^{ν_+^ℓ x}` as x → −∞, where ν_± are the two roots of
//! `ν² + c_x ν − (k_y²ℓ² + i c_x k_x ℓ) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::profile::PeriodicProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// `(z, s)` with `z = k_y²ℓ² + i c_x k_x ℓ` and `s = sqrt(c_x²/4 + z)`.
#[inline]
fn root_parts(ell: f64, k_x: f64, c_x: f64, k_y: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(k_y * k_y * ell * ell, c_x * k_x * ell);
    let s = (Complex64::new(0.25 * c_x * c_x, 0.0) + z).sqrt();
    (z, s)
}

/// ν_+ for raw parameters, evaluated as `z / (c_x/2 + s)` to avoid cancellation.
#[inline]
pub fn nu_plus(ell: f64, k_x: f64, c_x: f64, k_y: f64) -> Complex64 {
    if ell == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (z, s) = root_parts(ell, k_x, c_x, k_y);
    let den = s + 0.5 * c_x;
    if den.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    z / den
}

/// `∂ν_+/∂k_x = i c_x ℓ / (2s)`, zero at ℓ = 0.
#[inline]
pub fn nu_plus_kx_derivative(ell: f64, k_x: f64, c_x: f64, k_y: f64) -> Complex64 {
    if ell == 0.0 || c_x == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let (_, s) = root_parts(ell, k_x, c_x, k_y);
    Complex64::new(0.0, 0.5 * c_x * ell) / s
}

/// ν_±^ℓ for the given parameters.
pub fn multiplier_symbol(ell: i64, k_x: f64, p: &ModelParams, branch: Branch) -> Complex64 {
    let plus = nu_plus(ell as f64, k_x, p.c_x, p.k_y);
    match branch {
        Branch::Plus => plus,
        Branch::Minus => -plus - p.c_x,
    }
}

/// `∂ν_+^ℓ/∂k_x`.
pub fn symbol_kx_derivative(ell: i64, k_x: f64, p: &ModelParams) -> Complex64 {
    nu_plus_kx_derivative(ell as f64, k_x, p.c_x, p.k_y)
}

/// ν_+^ℓ for ℓ = 0 … n/2−1.
pub fn plus_symbols(n_modes: usize, k_x: f64, c_x: f64, k_y: f64) -> Vec<Complex64> {
    (0..n_modes / 2)
        .map(|l| nu_plus(l as f64, k_x, c_x, k_y))
        .collect()
}

/// `∂ν_+^ℓ/∂k_x` for ℓ = 0 … n/2−1.
pub fn plus_symbol_derivatives(n_modes: usize, k_x: f64, c_x: f64, k_y: f64) -> Vec<Complex64> {
    (0..n_modes / 2)
        .map(|l| nu_plus_kx_derivative(l as f64, k_x, c_x, k_y))
        .collect()
}

/// Multiply coefficient ℓ by `symbol(ℓ)`.
///
/// The symbol must satisfy `symbol(−ℓ) = conj(symbol(ℓ))` on the resolved
/// band, so that real profiles map to real profiles.
pub fn apply_multiplier(
    psi: &PeriodicProfile,
    symbol: impl Fn(i64) -> Complex64,
) -> Result<PeriodicProfile> {
    let n = psi.n_modes();
    let mut out = Vec::with_capacity(n / 2);
    for (l, c) in psi.coeffs().iter().enumerate() {
        let ell = l as i64;
        let s = symbol(ell);
        let t = symbol(-ell);
        let scale = s.norm().max(t.norm()).max(1e-300);
        if !s.re.is_finite() || !s.im.is_finite() || (s - t.conj()).norm() > 1e-12 * scale {
            return Err(Error::InvalidSymbol { ell });
        }
        if ell == 0 && s.im.abs() > 1e-12 * scale {
            return Err(Error::InvalidSymbol { ell });
        }
        out.push(c * s);
    }
    PeriodicProfile::from_coeffs(n, out)
}

/// Apply a symbol given on ℓ = 0 … n/2−1; the zero mode uses its real part.
pub fn apply_half_symbol(psi: &PeriodicProfile, symbol: &[Complex64]) -> Result<PeriodicProfile> {
    if symbol.len() != psi.coeffs().len() {
        return Err(Error::DiscretizationMismatch {
            expected: psi.coeffs().len(),
            got: symbol.len(),
        });
    }
    let out = psi
        .coeffs()
        .iter()
        .zip(symbol)
        .map(|(c, s)| c * s)
        .collect();
    PeriodicProfile::from_coeffs(psi.n_modes(), out)
}

/// `D_+ψ` for the given parameters.
pub fn apply_dplus(psi: &PeriodicProfile, k_x: f64, p: &ModelParams) -> Result<PeriodicProfile> {
    apply_half_symbol(psi, &plus_symbols(psi.n_modes(), k_x, p.c_x, p.k_y))
}

/// `⨍ ψ|∂_ζ|ψ = Σ_ℓ |ℓ| |ψ_ℓ|²`.
pub fn h_half_seminorm(psi: &PeriodicProfile) -> f64 {
    psi.coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, c)| 2.0 * l as f64 * c.norm_sqr())
        .sum()
}
