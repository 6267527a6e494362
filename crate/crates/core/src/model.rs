//! Model parameters and the boundary flux nonlinearity.
//!
//! The flux `g` is the strain-displacement relation imposed at the quenching
//! line: the normal derivative of the phase equals `g(phase)` there. It must be
//! smooth, `2π`-periodic and strictly positive.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of trapezoid nodes used for flux averages.
pub const FLUX_QUADRATURE_NODES: usize = 4096;

/// A user-supplied periodic flux with its derivatives.
pub trait FluxFunction: Send + Sync {
    fn value(&self, v: f64) -> f64;
    fn deriv(&self, v: f64) -> f64;

    /// Second derivative; defaults to a centered difference of `deriv`.
    fn second_deriv(&self, v: f64) -> f64 {
        let h = 1e-5;
        (self.deriv(v + h) - self.deriv(v - h)) / (2.0 * h)
    }

    fn name(&self) -> &str {
        "custom"
    }
}

/// Flux selector.
#[derive(Clone)]
pub enum Flux {
    /// `g(v) = 1 + κ sin v`.
    Sinusoidal,
    Custom(Arc<dyn FluxFunction>),
}

impl fmt::Debug for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flux::Sinusoidal => write!(f, "Sinusoidal"),
            Flux::Custom(g) => write!(f, "Custom({})", g.name()),
        }
    }
}

impl Serialize for Flux {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Flux::Sinusoidal => s.serialize_str("sinusoidal"),
            Flux::Custom(g) => s.serialize_str(g.name()),
        }
    }
}

impl<'de> Deserialize<'de> for Flux {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        match name.as_str() {
            "sinusoidal" => Ok(Flux::Sinusoidal),
            other => Err(serde::de::Error::custom(format!(
                "flux '{other}' cannot be restored from a serialized record"
            ))),
        }
    }
}

/// Parameters of the traveling-wave problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    /// Quench speed.
    pub c_x: f64,
    /// Lateral wavenumber.
    pub k_y: f64,
    /// Flux amplitude.
    pub kappa: f64,
    pub flux: Flux,
}

impl ModelParams {
    /// Sinusoidal flux parameters, validated.
    pub fn new(c_x: f64, k_y: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            c_x,
            k_y,
            kappa,
            flux: Flux::Sinusoidal,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_flux(mut self, flux: Arc<dyn FluxFunction>) -> Result<Self> {
        self.flux = Flux::Custom(flux);
        self.validate()?;
        Ok(self)
    }

    pub fn with_cx(&self, c_x: f64) -> Self {
        Self {
            c_x,
            ..self.clone()
        }
    }

    pub fn with_ky(&self, k_y: f64) -> Self {
        Self {
            k_y,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c_x.is_finite() || self.c_x < 0.0 {
            return Err(Error::InvalidParams(format!(
                "c_x = {} must be >= 0",
                self.c_x
            )));
        }
        if !self.k_y.is_finite() || self.k_y < 0.0 {
            return Err(Error::InvalidParams(format!(
                "k_y = {} must be >= 0",
                self.k_y
            )));
        }
        if !(self.kappa.abs() < 1.0) {
            return Err(Error::InvalidParams(format!(
                "kappa = {} must lie in (-1, 1)",
                self.kappa
            )));
        }
        if self.c_x == 0.0 && self.k_y == 0.0 {
            return Err(Error::InvalidParams(
                "c_x = 0 and k_y = 0 leaves k_x undetermined".into(),
            ));
        }
        if let Flux::Custom(_) = self.flux {
            let (lo, _) = self.flux_range();
            if !(lo > 0.0) {
                return Err(Error::InvalidParams(
                    "flux must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_sinusoidal(&self) -> bool {
        matches!(self.flux, Flux::Sinusoidal)
    }

    #[inline]
    pub fn flux(&self, v: f64) -> f64 {
        match &self.flux {
            Flux::Sinusoidal => 1.0 + self.kappa * v.sin(),
            Flux::Custom(g) => g.value(v),
        }
    }

    #[inline]
    pub fn flux_deriv(&self, v: f64) -> f64 {
        match &self.flux {
            Flux::Sinusoidal => self.kappa * v.cos(),
            Flux::Custom(g) => g.deriv(v),
        }
    }

    #[inline]
    pub fn flux_second_deriv(&self, v: f64) -> f64 {
        match &self.flux {
            Flux::Sinusoidal => -self.kappa * v.sin(),
            Flux::Custom(g) => g.second_deriv(v),
        }
    }

    /// Periodic average of `g`; exact for the sinusoidal flux.
    pub fn mean_flux(&self) -> f64 {
        if self.is_sinusoidal() {
            return 1.0;
        }
        let n = FLUX_QUADRATURE_NODES;
        (0..n)
            .map(|j| self.flux(TAU * j as f64 / n as f64))
            .sum::<f64>()
            / n as f64
    }

    /// Harmonic average `(⨍ 1/g)^{-1}`; exact for the sinusoidal flux.
    pub fn harmonic_mean_flux(&self) -> f64 {
        if self.is_sinusoidal() {
            return (1.0 - self.kappa * self.kappa).sqrt();
        }
        let n = FLUX_QUADRATURE_NODES;
        let inv = (0..n)
            .map(|j| 1.0 / self.flux(TAU * j as f64 / n as f64))
            .sum::<f64>()
            / n as f64;
        1.0 / inv
    }

    /// `(min g, max g)`; exact for the sinusoidal flux, sampled otherwise.
    pub fn flux_range(&self) -> (f64, f64) {
        match &self.flux {
            Flux::Sinusoidal => (1.0 - self.kappa.abs(), 1.0 + self.kappa.abs()),
            Flux::Custom(_) => {
                let n = FLUX_QUADRATURE_NODES;
                (0..n)
                    .map(|j| self.flux(TAU * j as f64 / n as f64))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            }
        }
    }

    /// Root of `g(ψ) = k` with `g'(ψ) > 0`, taken in `[-π/2, π/2]` for the
    /// sinusoidal flux with κ > 0.
    pub fn rising_root(&self, k: f64) -> Result<f64> {
        let (lo, hi) = self.flux_range();
        if !(k > lo && k < hi) {
            return Err(Error::BasePoint { k_x: k });
        }
        if self.is_sinusoidal() && self.kappa > 0.0 {
            return Ok(((k - 1.0) / self.kappa).asin());
        }
        // bracket a sign change of g - k where g is increasing
        let n = 720;
        let h = TAU / n as f64;
        for j in 0..n {
            let a = -std::f64::consts::PI + j as f64 * h;
            let b = a + h;
            let (fa, fb) = (self.flux(a) - k, self.flux(b) - k);
            if fa <= 0.0 && fb > 0.0 {
                let (mut a, mut b) = (a, b);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if self.flux(m) - k <= 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-15 {
                        break;
                    }
                }
                return Ok(0.5 * (a + b));
            }
        }
        Err(Error::BasePoint { k_x: k })
    }
}
