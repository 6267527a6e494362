//! Real `2π`-periodic profiles stored as Fourier coefficients.
//!
//! Convention: `ψ(ζ) = Σ_ℓ ψ_ℓ e^{iℓζ}` for ℓ = −N/2 … N/2−1 with
//! `ψ_{−ℓ} = conj(ψ_ℓ)`. Only ℓ = 0 … N/2−1 are stored; the unmatched mode
//! −N/2 is identically zero. Averages use `⨍ = (1/2π)∫`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProfile {
    n_modes: usize,
    /// ψ_ℓ for ℓ = 0 … N/2−1.
    coeffs: Vec<Complex64>,
}

/// Serialized layout: full coefficient list ordered ℓ = −N/2 … N/2−1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub n_modes: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// Collocation points `ζ_j = 2πj/N`.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "mode count {n} must be even and >= 4"
        )));
    }
    Ok(())
}

impl PeriodicProfile {
    pub fn zeros(n_modes: usize) -> Result<Self> {
        check_n(n_modes)?;
        Ok(Self {
            n_modes,
            coeffs: vec![ZERO; n_modes / 2],
        })
    }

    /// From stored coefficients ℓ = 0 … N/2−1; the zero mode is made real.
    pub fn from_coeffs(n_modes: usize, mut coeffs: Vec<Complex64>) -> Result<Self> {
        check_n(n_modes)?;
        if coeffs.len() != n_modes / 2 {
            return Err(Error::DiscretizationMismatch {
                expected: n_modes / 2,
                got: coeffs.len(),
            });
        }
        coeffs[0].im = 0.0;
        Ok(Self { n_modes, coeffs })
    }

    /// From values on [`grid`]; the Nyquist component is discarded.
    pub fn from_physical(values: &[f64]) -> Result<Self> {
        let n = values.len();
        check_n(n)?;
        let mut half = fft::forward(values);
        half.truncate(n / 2);
        half[0].im = 0.0;
        Ok(Self {
            n_modes: n,
            coeffs: half,
        })
    }

    pub fn from_fn(n_modes: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v: Vec<f64> = grid(n_modes).into_iter().map(f).collect();
        Self::from_physical(&v)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Stored coefficients ℓ = 0 … N/2−1.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// ψ_ℓ for any integer ℓ (zero outside the resolved band).
    pub fn coeff(&self, ell: i64) -> Complex64 {
        let m = ell.unsigned_abs() as usize;
        if m >= self.n_modes / 2 {
            return ZERO;
        }
        if ell >= 0 {
            self.coeffs[m]
        } else {
            self.coeffs[m].conj()
        }
    }

    /// Half spectrum of length N/2+1 (Nyquist zero), as used by [`fft::inverse`].
    pub fn half_spectrum(&self, n_grid: usize) -> Vec<Complex64> {
        fft::resize_half_spectrum(&self.coeffs, n_grid)
    }

    pub fn to_physical(&self) -> Vec<f64> {
        fft::inverse(&self.half_spectrum(self.n_modes), self.n_modes)
    }

    /// Values on a finer (or coarser) grid of `n_grid` points by spectral interpolation.
    pub fn sample(&self, n_grid: usize) -> Vec<f64> {
        fft::inverse(&self.half_spectrum(n_grid), n_grid)
    }

    /// Zero-pad or truncate to a new mode count.
    pub fn resample(&self, n_modes: usize) -> Result<Self> {
        check_n(n_modes)?;
        let mut c = vec![ZERO; n_modes / 2];
        let keep = c.len().min(self.coeffs.len());
        c[..keep].copy_from_slice(&self.coeffs[..keep]);
        Ok(Self { n_modes, coeffs: c })
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * Complex64::new(0.0, l as f64))
            .collect();
        Self {
            n_modes: self.n_modes,
            coeffs,
        }
    }

    /// The translate `ζ ↦ ψ(ζ + a)`.
    pub fn shift(&self, a: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * Complex64::from_polar(1.0, l as f64 * a))
            .collect();
        Self {
            n_modes: self.n_modes,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n_modes: self.n_modes,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n_modes: self.n_modes,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0].re += c;
        out
    }

    /// `⨍ u v` for real profiles.
    pub fn pairing(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        let mut s = self.coeffs[0].re * other.coeffs[0].re;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs).skip(1) {
            s += 2.0 * (a * b.conj()).re;
        }
        Ok(s)
    }

    pub fn sup_norm(&self) -> f64 {
        self.to_physical()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `(Σ_ℓ |ψ_ℓ|²)^{1/2}`, the `⨍`-normalized L² norm.
    pub fn l2_norm(&self) -> f64 {
        self.pairing(self).unwrap_or(0.0).max(0.0).sqrt()
    }

    /// Largest coefficient magnitude among the top decile of resolved modes.
    pub fn tail_amplitude(&self) -> f64 {
        let half = self.coeffs.len();
        let start = half - (half / 10).max(1);
        self.coeffs[start..]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::DiscretizationMismatch {
                expected: self.n_modes,
                got: other.n_modes,
            });
        }
        Ok(())
    }

    pub fn to_record(&self) -> ProfileRecord {
        let n = self.n_modes as i64;
        let (mut re, mut im) = (
            Vec::with_capacity(self.n_modes),
            Vec::with_capacity(self.n_modes),
        );
        for ell in -n / 2..n / 2 {
            let c = self.coeff(ell);
            re.push(c.re);
            im.push(c.im);
        }
        ProfileRecord {
            n_modes: self.n_modes,
            re,
            im,
        }
    }

    /// Rebuild from a serialized record; fails unless the coefficients are
    /// conjugate symmetric to 1e-12 relative.
    pub fn from_record(rec: &ProfileRecord) -> Result<Self> {
        let n = rec.n_modes;
        check_n(n)?;
        if rec.re.len() != n || rec.im.len() != n {
            return Err(Error::DiscretizationMismatch {
                expected: n,
                got: rec.re.len().min(rec.im.len()),
            });
        }
        let at = |ell: i64| {
            let idx = (ell + n as i64 / 2) as usize;
            Complex64::new(rec.re[idx], rec.im[idx])
        };
        let scale = rec
            .re
            .iter()
            .chain(&rec.im)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let mut coeffs = Vec::with_capacity(n / 2);
        for ell in 0..(n / 2) as i64 {
            let c = at(ell);
            if ell > 0 && (c - at(-ell).conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidSymbol { ell });
            }
            coeffs.push(c);
        }
        Self::from_coeffs(n, coeffs)
    }

    /// `(ζ_j, ψ_j)` rows on the collocation grid.
    pub fn physical_rows(&self) -> Vec<(f64, f64)> {
        grid(self.n_modes)
            .into_iter()
            .zip(self.to_physical())
            .collect()
    }
}

/// Map ζ to its representative in [−π, π).
pub fn centered(zeta: f64) -> f64 {
    let r = (zeta + PI).rem_euclid(TAU);
    r - PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_has_unit_half_coefficients() {
        let p = PeriodicProfile::from_fn(32, |z| 2.0 * z.cos()).unwrap();
        assert!((p.coeff(1).re - 1.0).abs() < 1e-14);
        assert!((p.coeff(-1).re - 1.0).abs() < 1e-14);
        assert!(p.coeff(16).norm() == 0.0);
    }

    #[test]
    fn derivative_of_sine() {
        let p = PeriodicProfile::from_fn(64, |z| (3.0 * z).sin()).unwrap();
        let d = p.derivative().to_physical();
        for (z, v) in grid(64).iter().zip(d) {
            assert!((v - 3.0 * (3.0 * z).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_translates() {
        let p = PeriodicProfile::from_fn(64, |z| z.sin() + 0.2 * (2.0 * z).cos()).unwrap();
        let s = p.shift(0.3).to_physical();
        for (z, v) in grid(64).iter().zip(s) {
            let want = (z + 0.3).sin() + 0.2 * (2.0 * (z + 0.3)).cos();
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn record_rejects_asymmetric_coefficients() {
        let p = PeriodicProfile::from_fn(8, |z| z.sin()).unwrap();
        let mut rec = p.to_record();
        rec.im[3] += 1.0;
        assert!(PeriodicProfile::from_record(&rec).is_err());
        let ok = PeriodicProfile::from_record(&p.to_record()).unwrap();
        assert_eq!(ok, p);
    }

    #[test]
    fn odd_mode_count_rejected() {
        assert!(PeriodicProfile::zeros(7).is_err());
    }

    #[test]
    fn centered_wraps() {
        assert!((centered(3.5 * PI) + 0.5 * PI).abs() < 1e-14);
        assert!((centered(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn large_round_trip() {
        let n = 1 << 16;
        let v: Vec<f64> = grid(n)
            .iter()
            .map(|z| (z.sin() * 3.0).exp() - 2.0)
            .collect();
        let p = PeriodicProfile::from_physical(&v).unwrap();
        // drop the Nyquist part of the input before comparing
        let back = p.to_physical();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let err = v
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-12, "round trip error {err}");
    }

    proptest! {
        #[test]
        fn physical_spectral_round_trip(seed in proptest::collection::vec(-1.0f64..1.0, 2..40), log_n in 3usize..11) {
            let n = 1usize << log_n;
            let mut coeffs = vec![Complex64::new(0.0, 0.0); n / 2];
            for (i, pair) in seed.chunks(2).enumerate() {
                if i >= n / 2 { break; }
                let im = if i == 0 { 0.0 } else { *pair.get(1).unwrap_or(&0.0) };
                coeffs[i] = Complex64::new(pair[0], im);
            }
            let p = PeriodicProfile::from_coeffs(n, coeffs).unwrap();
            let q = PeriodicProfile::from_physical(&p.to_physical()).unwrap();
            let scale = p.coeffs().iter().fold(1e-300f64, |m, c| m.max(c.norm()));
            for (a, b) in p.coeffs().iter().zip(q.coeffs()) {
                prop_assert!((a - b).norm() <= 1e-12 * scale);
            }
            let rec = PeriodicProfile::from_record(&p.to_record()).unwrap();
            prop_assert_eq!(rec, p);
        }
    }
}
