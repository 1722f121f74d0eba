use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The kernel is singular on the diagonal.
    #[error("points coincide (|x - y| = {distance:e}); the kernel is singular on the diagonal")]
    CoincidentPoints { distance: f64 },

    /// Adaptive node doubling hit the node budget before the relative change fell below `tol`.
    #[error("quadrature did not reach tolerance {tol:e} within {max_nodes} nodes")]
    QuadratureBudgetExceeded { tol: f64, max_nodes: usize },

    #[error("field support radius {support} exceeds carrier radius {carrier}")]
    SupportExceedsCarrier { support: f64, carrier: f64 },

    #[error("cumulant order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("radial profile has zero L2 mass")]
    DegenerateProfile,

    #[error("empty sample")]
    EmptySample,

    #[error("dimension {dim} is not supported here ({reason})")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("invalid mollifier placement: {0}")]
    InvalidPlacement(String),

    #[error("invalid radial profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
