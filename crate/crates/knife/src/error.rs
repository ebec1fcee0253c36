//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum KnifeError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("classification labels must be -1 or +1, found {0}")]
    InvalidLabel(f64),

    #[error("{family} loss has no gradient; use a smooth surrogate (squared or Huberized hinge)")]
    UnsupportedGradient { family: &'static str },

    #[error("hinge loss cannot be used for iterative fitting; use a smooth surrogate (squared or Huberized hinge)")]
    NonSmoothLoss,

    #[error("singular kernel system: lambda1 = 0 with a rank-deficient kernel matrix")]
    SingularSystem,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rejection sampler exceeded {cap} proposals")]
    RejectionCapExceeded { cap: usize },

    #[error("feature path did not reach an empty support within {cap} grid points")]
    PathCapExceeded { cap: usize },

    #[error("no restart produced a finite objective")]
    AllRestartsFailed,

    #[error("all candidate fits failed during parameter selection")]
    SelectionFailed,

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KnifeError>;
