use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("division by zero: {0}")]
    DivideByZero(String),

    #[error("non-finite iterate at iteration {iteration} in {block}")]
    NonFinite {
        iteration: usize,
        block: &'static str,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("trial {trial} (seed {seed}) at sweep point {point} failed: {source}")]
    TrialFailed {
        trial: usize,
        seed: u64,
        point: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True when the error (or the error it wraps) reports an infeasible
    /// problem rather than a bug or I/O failure.
    pub fn is_infeasible(&self) -> bool {
        match self {
            Error::Infeasible(_) => true,
            Error::TrialFailed { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
