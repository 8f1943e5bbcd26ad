use std::path::PathBuf;

/// Errors produced while loading scenarios, checkpoints, and timeseries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file could not be read or written.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was syntactically malformed.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A parsed value violates an invariant; `field` names the offender.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    /// A genome checkpoint does not match the requested topology.
    #[error("checkpoint mismatch: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }
}
