//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the numerical layers of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A (mode, p) pair outside the validity window of the requested quantity.
    #[error("mode violation: {0}")]
    ModeViolation(String),

    /// A vector that must lie on the unit sphere does not.
    #[error("vector is not unit length: |norm - 1| = {0:.3e}")]
    NonUnitVector(f64),

    /// A series or iteration failed to reach its accuracy target.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// A Gram matrix was numerically rank deficient even after a retry.
    #[error("rank-deficient Gram matrix: min/max eigenvalue ratio = {0:.3e}")]
    RankDeficient(f64),

    /// A covariance matrix that must be (semi)definite is not.
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    /// Sphere grids are only built for dimensions 1, 2 and 3.
    #[error("unsupported sphere dimension m = {0}")]
    UnsupportedDimension(u32),

    /// Statistical routines refuse to run on too little data.
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    /// A configuration field is inconsistent or out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
