use std::path::PathBuf;

use thiserror::Error;

use crate::graph::snapshot::SnapshotError;
use crate::http::HttpError;
use crate::provider::ProviderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for operations that cross module boundaries.
#[derive(Debug, Error)]
pub enum Error {
    #[error("snapshot: {0}")]
    Snapshot(#[from] SnapshotError),

    #[error("http: {0}")]
    Http(#[from] HttpError),

    #[error("provider: {0}")]
    Provider(#[from] ProviderError),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config {name}: {message}")]
    Config { name: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
