use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("document `{0}` already stored with different content")]
    Conflict(String),

    #[error("annotation already exists for {0}")]
    DuplicateAnnotation(String),

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("XML parse error at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("unsupported feed format: {0}")]
    FeedFormat(String),

    #[error("feature dimension mismatch: model expects {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("training failed: {0}")]
    Training(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }
}
