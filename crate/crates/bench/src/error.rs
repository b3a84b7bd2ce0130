use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[source] slse_core::Error),
    #[error("{0}")]
    Precondition(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl BenchError {
    /// Process exit status: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Numerical(_) => 3,
            BenchError::Precondition(_) | BenchError::Io { .. } | BenchError::Csv(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<slse_core::Error> for BenchError {
    fn from(e: slse_core::Error) -> Self {
        match e {
            slse_core::Error::Config(msg) => BenchError::Config(msg),
            other if other.is_numerical() => BenchError::Numerical(other),
            other => BenchError::Config(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
