use std::io;

use thiserror::Error;

/// Errors raised by the library. Solver non-convergence is not an error: it
/// is reported through [`crate::formulations::SolveStatus`].
#[derive(Debug, Error)]
pub enum GinvError {
    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("instance too large for the unreduced LP: n*m = {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("missing report pair: {0}")]
    MissingPair(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, GinvError>;

impl GinvError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        GinvError::Dimension(msg.into())
    }
}
