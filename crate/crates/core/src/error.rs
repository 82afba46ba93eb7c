use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed circuit: {0}")]
    Structural(String),

    #[error("decode failed: {0}")]
    Decode(String),

    #[error("encode failed: {0}")]
    Encoding(String),

    #[error("bias on coordinate {coord} is degenerate (|mu| = 1)")]
    SingularBias { coord: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("training diverged at step {step}: non-finite loss")]
    Divergence { step: usize },

    #[error("covariance weight c * |mean label| = {value} must be below 1")]
    InvalidCovarianceWeight { value: f64 },

    #[error("support overflow: recovered {found} coordinates, at most {k} allowed")]
    SupportOverflow { found: usize, k: usize },

    #[error("ambiguous truth-table cell {cell}: query answer is exactly zero")]
    AmbiguousCell { cell: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
