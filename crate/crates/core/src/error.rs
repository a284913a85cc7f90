use std::io;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// A record could not be decoded. `location` is a byte offset for binary
    /// input and a 1-based line number for text input.
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("ordering error: {0}")]
    Ordering(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema error in {block}: {message}")]
    Schema { block: String, message: String },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Byte(u64),
    Line(u64),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Byte(b) => write!(f, "byte {b}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(block: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema {
            block: block.into(),
            message: msg.into(),
        }
    }

    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::Ordering(_) => "ordering",
            Error::Config(_) => "config",
            Error::Schema { .. } => "schema",
            Error::Overflow(_) => "overflow",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
