use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("detector pool is empty")]
    EmptyPool,

    #[error("duplicate detector name `{0}`")]
    DuplicateDetector(String),

    #[error("detector `{0}` must have a positive param_count")]
    NonPositiveParams(String),

    #[error("duplicate trial id `{trial}` in {}", path.display())]
    DuplicateTrial { path: PathBuf, trial: String },

    #[error("labels need at least one trial of each class (bonafide: {bonafide}, spoof: {spoof})")]
    DegenerateClasses { bonafide: usize, spoof: usize },

    #[error("detector `{detector}` has no score for trial `{trial}`")]
    MissingTrial { detector: String, trial: String },

    #[error("detector `{detector}` has a non-finite score for trial `{trial}`")]
    NonFiniteScore { detector: String, trial: String },

    #[error("score vector length {scores} does not match {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },

    #[error("non-finite score at position {0}")]
    NonFiniteValue(usize),

    #[error("infeasible chromosome: {0}")]
    Infeasible(&'static str),

    #[error("chromosome length {got} does not match pool size {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fronts mix binary and real encodings")]
    MixedEncodings,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Infeasible(_) | Error::DimensionMismatch { .. } | Error::Json(_) => {
                ErrorKind::Internal
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
