use thiserror::Error;

/// Errors produced by the numerical kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: incompatible shapes, expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix is numerically singular at column {column} (|R_kk| = {pivot:e})")]
    Singular { column: usize, pivot: f64 },

    #[error("length {len} is not a power of two; zero-pad the input to {padded}")]
    NotPowerOfTwo { len: usize, padded: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration diverged at t = {t} (stage {stage})")]
    Diverged { t: usize, stage: u8 },

    #[error("conjugate gradient breakdown at iteration {iter}: non-positive curvature {curvature:e}")]
    Breakdown { iter: usize, curvature: f64 },

    #[error("index {index} out of range 1..={len}")]
    OutOfRange { index: usize, len: usize },

    #[error("model file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for errors caused by numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::Diverged { .. } | Error::Breakdown { .. }
        )
    }
}
