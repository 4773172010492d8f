//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Law failed validation; all violations are listed, not just the first.
    #[error("invalid law: {}", .0.join("; "))]
    InvalidLaw(Vec<String>),

    /// The law has no absolutely continuous component at any order, so sums
    /// of i.i.d. copies stay atomic and no density can be produced.
    #[error("law is purely atomic: i.i.d. sums have no density component")]
    PurelyAtomic,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),

    #[error("Lp exponent must satisfy p >= 1, got {0}")]
    BadExponent(f64),

    /// Some nonzero frequency has multiplier 1, so `I - A` is singular on the
    /// mean-zero subspace and the inverse kernel does not exist.
    #[error("operator resonant at frequency {k}: |1 - lambda_k| below {tol:e}")]
    Resonant { k: i64, tol: f64 },

    #[error("frequency {freq} outside cutoff {cutoff}")]
    FrequencyOverflow { freq: i64, cutoff: usize },

    #[error("parameter out of range: {0}")]
    BadParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
