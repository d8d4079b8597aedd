use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while building or analysing a channel.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size limit exceeded: {what} needs {requested}, cap is {cap}")]
    SizeLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration or argument failed validation. `key` names the offending input.
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Iterated state left the set of density matrices.
    #[error("numerical drift at power {power}: {reason}")]
    Drift { power: usize, reason: String },

    #[error("spectrum is near-defective (eigenvector condition number {condition:.3e}); decomposition unsupported")]
    NearDefective { condition: f64 },

    #[error("finite-difference step {delta:e} unreliable: estimates {coarse:e} and {fine:e} disagree")]
    StepSize { delta: f64, coarse: f64, fine: f64 },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("linear algebra backend: {0}")]
    Lapack(#[from] ndarray_linalg::error::LinalgError),

    #[error("malformed document {path:?}: {reason}")]
    Format { path: Option<PathBuf>, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeLimit { .. } | Error::Shape(_) | Error::Validation { .. } | Error::Format { .. } => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
