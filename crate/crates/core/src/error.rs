use std::io;

use thiserror::Error;

/// Errors shared by every routine in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain the operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Raw text was not valid UTF-8. `offset` is the absolute byte offset of
    /// the first invalid byte.
    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: u64 },

    #[error("vocabulary exceeds the {limit}-entry id space")]
    Capacity { limit: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The least-squares design matrix is rank deficient.
    #[error("rank deficient regression: {0}")]
    Rank(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag, used by the CLI error reporter.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::EmptyInput(_) => "empty_input",
            Error::Decode { .. } => "decode",
            Error::Capacity { .. } => "capacity",
            Error::Numerical(_) => "numerical",
            Error::Rank(_) => "rank",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
