use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node id {id} out of range for graph with {node_count} nodes")]
    InvalidNode { id: usize, node_count: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient support: requested {requested} edges but only {available} pairs have positive similarity")]
    InsufficientSupport { requested: usize, available: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("cannot fit model: {0}")]
    Fit(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("score alignment: {0}")]
    Alignment(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("repetition {rep} (seed {seed}) failed: {source}")]
    Repetition {
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (paths, flags, file contents)
    /// rather than by a failure during computation.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Config(_) | Error::Range(_) => true,
            Error::Repetition { source, .. } => source.is_usage(),
            _ => false,
        }
    }
}
