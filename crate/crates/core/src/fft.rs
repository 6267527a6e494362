//! Real FFT helpers with per-thread plan caches.
//!
//! `forward` returns normalized coefficients `c_ℓ`, ℓ = 0..=n/2, such that
//! `x_j = Σ_ℓ c_ℓ e^{2πi ℓ j / n}` (the full sum over negative ℓ implied by
//! conjugate symmetry). `inverse` is the exact inverse of `forward`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

fn r2c(n: usize) -> Arc<dyn RealToComplex<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn c2r(n: usize) -> Arc<dyn ComplexToReal<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Normalized forward transform; output has length `n/2 + 1`.
pub fn forward(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let plan = r2c(n);
    let mut input = x.to_vec();
    let mut out = plan.make_output_vec();
    plan.process(&mut input, &mut out)
        .expect("forward FFT buffer sizes");
    let scale = 1.0 / n as f64;
    for c in out.iter_mut() {
        *c *= scale;
    }
    out
}

/// Inverse of [`forward`]; `coeffs` has length `n/2 + 1`.
///
/// The imaginary parts of the zero mode (and of the Nyquist mode for even `n`)
/// are ignored.
pub fn inverse(coeffs: &[Complex64], n: usize) -> Vec<f64> {
    debug_assert_eq!(coeffs.len(), n / 2 + 1);
    let plan = c2r(n);
    let mut input = coeffs.to_vec();
    input[0].im = 0.0;
    if n.is_multiple_of(2) {
        let last = input.len() - 1;
        input[last].im = 0.0;
    }
    let mut out = plan.make_output_vec();
    plan.process(&mut input, &mut out)
        .expect("inverse FFT buffer sizes");
    out
}

/// Resize a half spectrum for a grid of `n_new` points, zero-padding or
/// truncating; the Nyquist entry of the result is zeroed.
pub fn resize_half_spectrum(coeffs: &[Complex64], n_new: usize) -> Vec<Complex64> {
    let len = n_new / 2 + 1;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let keep = coeffs.len().min(len);
    out[..keep].copy_from_slice(&coeffs[..keep]);
    if n_new.is_multiple_of(2) {
        out[len - 1] = Complex64::new(0.0, 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let n = 96;
        let x: Vec<f64> = (0..n).map(|j| ((j * 7 % 13) as f64).sin()).collect();
        let c = forward(&x);
        let y = inverse(&c, n);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn normalization_single_mode() {
        let n = 16;
        let x: Vec<f64> = (0..n)
            .map(|j| (std::f64::consts::TAU * 3.0 * j as f64 / n as f64).cos())
            .collect();
        let c = forward(&x);
        assert!((c[3].re - 0.5).abs() < 1e-14);
        assert!(c[3].im.abs() < 1e-14);
    }
}
