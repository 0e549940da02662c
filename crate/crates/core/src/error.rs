use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row index {index} out of range for a system with {m} inequalities")]
    RowIndex { index: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("row {row} has an all-zero coefficient vector; every row must be non-zero")]
    ZeroRow { row: usize },

    #[error("pseudo-projection is zero: the point already satisfies every inequality")]
    PhiZero,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("reduce over an empty slice list")]
    EmptyList,

    #[error("worker {worker} failed: {reason}")]
    Worker { worker: usize, reason: String },

    #[error("parallel engine: {0}")]
    Engine(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
