use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed record: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("duplicate id {0}")]
    DuplicateId(usize),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("example {0}: empty token sequence")]
    EmptyTokens(usize),

    #[error("unknown id {0}")]
    UnknownId(usize),

    #[error("example {id}: row {row} not normalized (sum {sum})")]
    RowNotNormalized { id: usize, row: usize, sum: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad tensor file: {0}")]
    BadTensorFile(String),

    #[error("strategy {strategy} requires {array}, which is absent")]
    MissingTensor {
        strategy: &'static str,
        array: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged at epoch {0}")]
    Diverged(usize),

    #[error("infeasible task config: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from bad input or parameters rather than
    /// an environment failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Diverged(_))
    }
}
