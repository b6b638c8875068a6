//! Crate-wide error types.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid coupling plan: {0}")]
    InvalidPlan(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("product density is singular at z = 0")]
    SingularAtZero,

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] NumericalFlag),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Non-fatal numerical conditions that must be surfaced, not silenced.
///
/// These map to CLI exit code 3; partial results are still written.
#[derive(Debug, Clone, Error)]
pub enum NumericalFlag {
    #[error(
        "near-critical point on boundary face {face} at arc position {position:.6} \
         (|grad| = {grad_norm:.3e}, below floor even after node jitter)"
    )]
    BoundaryCriticalPoint {
        face: usize,
        position: f64,
        grad_norm: f64,
    },
}

impl Error {
    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::InvalidMeasure(_)
            | Error::InvalidPlan(_)
            | Error::DegenerateMeasure(_)
            | Error::DimensionMismatch { .. } => 2,
            _ => 1,
        }
    }
}
