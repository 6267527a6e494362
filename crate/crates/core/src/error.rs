use crate::profile::PeriodicProfile;

pub type Result<T> = std::result::Result<T, Error>;

/// Last Newton iterate carried by a divergence error.
#[derive(Debug, Clone)]
pub struct LastIterate {
    /// Periodic iterate; `None` for problems posed on a line or interval.
    pub psi: Option<PeriodicProfile>,
    pub k_x: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("multiplier symbol is not conjugate symmetric at mode {ell}")]
    InvalidSymbol { ell: i64 },

    #[error("residual is not finite")]
    NonfiniteResidual,

    #[error("discretization mismatch: expected {expected} modes, got {got}")]
    DiscretizationMismatch { expected: usize, got: usize },

    #[error(
        "Newton iteration did not converge after {iterations} steps (residual {residual:.3e})"
    )]
    Divergence {
        iterations: usize,
        residual: f64,
        last: Box<LastIterate>,
    },

    #[error("Krylov solve stagnated at relative residual {rel_residual:.3e} after {iterations} iterations")]
    LinearSolve {
        iterations: usize,
        rel_residual: f64,
    },

    #[error("adjoint null space is not simple: {0}")]
    DegenerateAdjoint(String),

    #[error("ill-conditioned coefficient: {0}")]
    IllConditioned(String),

    #[error("field reconstruction requires x <= 0, got x = {0}")]
    PositiveX(f64),

    #[error("argument {re} + {im}i lies on the branch cut")]
    BranchCut { re: f64, im: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no base point with g(psi) = {k_x} and g'(psi) > 0")]
    BasePoint { k_x: f64 },

    #[error("k_x = {k_x} admits no pair of hyperbolic equilibria")]
    NoHyperbolicEquilibria { k_x: f64 },

    #[error("not bracketed: {0}")]
    NotBracketed(String),

    #[error("extrapolation beyond the tabulated curve at {0}")]
    Extrapolation(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
