use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The CLI maps [`Error::Resource`] and [`Error::Io`] to exit code 2 and
/// everything else to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("unsupported threshold: {0}")]
    UnsupportedThreshold(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("engine invariant violated: {0}")]
    Engine(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) | Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
