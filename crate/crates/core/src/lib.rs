//! Selected wavenumbers of stripe patterns grown behind a moving quenching line.
//!
//! The far field is a phase-diffusion equation on a half plane; the quenching
//! line imposes the nonlinear flux `φ_x = g(φ)`. Traveling waves reduce to a
//! periodic boundary-integral equation whose Lagrange multiplier is the
//! selected normal wavenumber k_x.

pub mod asymptotics;
pub mod bisolver;
pub mod continuation;
pub mod error;
pub mod fft;
pub mod gmres;
pub mod heteroclinic;
pub mod io;
pub mod localmodel;
pub mod model;
pub mod multiplier;
pub mod profile;
pub mod specfun;

pub use bisolver::{newton_solve, SolveResult, SolverOptions};
pub use error::{Error, Result};
pub use model::{Flux, FluxFunction, ModelParams};
pub use multiplier::Branch;
pub use profile::PeriodicProfile;
