use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the answer-set toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("answer {0:?} is empty after normalization")]
    UnusableAnswer(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("answer set for label {label:?} is invalid: {message}")]
    Integrity { label: String, message: String },

    #[error("missing resource: {0}")]
    MissingResource(String),

    #[error("resource unavailable: {0}")]
    ResourceUnavailable(String),

    #[error("cache miss in offline mode for label(s): {}", .0.join(", "))]
    CacheMiss(Vec<String>),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by an external resource (network, cache,
    /// scoring service, missing data files) rather than by the data itself.
    pub fn is_resource_error(&self) -> bool {
        matches!(
            self,
            Error::MissingResource(_)
                | Error::ResourceUnavailable(_)
                | Error::CacheMiss(_)
                | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
