use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the open unit ball (norm {norm})")]
    Domain { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("corpus line {line}: {reason}")]
    CorpusLine { line: usize, reason: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("split `{split}` has {size} item(s); at least 2 are needed to sample a negative")]
    SplitTooSmall { split: &'static str, size: usize },

    #[error("malformed {what} file: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("pooled embedding norm {norm} exceeds the ball clearance limit {limit}")]
    BallInvariant { norm: f64, limit: f64 },

    #[error("features have zero variance")]
    ZeroVariance,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad inputs or flags rather than a failure
    /// while doing the work. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidConfig(_)
                | Error::CorpusLine { .. }
                | Error::DuplicateId(_)
                | Error::UnknownId(_)
                | Error::SplitTooSmall { .. }
                | Error::Format { .. }
                | Error::Empty(_)
        )
    }
}
