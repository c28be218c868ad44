use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("horizon mismatch: expected {expected} intervals, found {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("empty scenario request")]
    EmptyScenarioRequest,

    #[error(
        "{count} net-demand combinations exceed the cap of {cap}; subsample the input scenario sets"
    )]
    CombinationCap { count: u128, cap: u128 },

    #[error("matrix not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("infinite quantile at p = {0}")]
    InfiniteQuantile(f64),

    #[error("degenerate reference: zero range")]
    DegenerateReference,

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 for bad input, 3 for numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::InfiniteQuantile(_)
            | Error::DegenerateReference => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
