use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Format {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("partition does not cover node `{0}`")]
    MissingNode(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{0}` is listed more than once")]
    DuplicateNode(String),

    #[error("size mismatch: {0}")]
    Mismatch(String),

    #[error("quality is undefined for a graph with zero total strength")]
    UndefinedQuality,

    #[error("node `{0}` has zero strength; the random walk is undefined there")]
    ZeroStrength(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("gravity model: {0}")]
    Gravity(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
