//! Error type shared across the crate.
//!
//! Variants are grouped by how the CLI maps them to exit codes: validation
//! problems (bad arguments, mismatched grids, malformed inputs) exit with 1,
//! while IO and parse failures exit with 2.

use std::path::Path;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated its contract (negative radius, threshold out of
    /// range, empty box where a non-empty one is required, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two masks or volumes that must share a grid do not.
    #[error("geometry mismatch between {left} and {right}")]
    GeometryMismatch { left: String, right: String },

    /// A 4x4 matrix that must be an invertible affine is not.
    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    /// Structurally valid file or data set that violates a semantic rule
    /// (duplicate ids, inconsistent case sets, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A file could not be decoded.
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    /// A file could not be decoded; `offset` is the byte where decoding failed.
    #[error("parse error in {path} at byte {offset}: {msg}")]
    ParseAt {
        path: String,
        offset: u64,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }

    pub fn parse_at(path: &Path, offset: u64, msg: impl Into<String>) -> Self {
        Error::ParseAt {
            path: path.display().to_string(),
            offset,
            msg: msg.into(),
        }
    }

    /// Process exit code the CLI uses for this error: 1 for validation
    /// failures, 2 for IO and parse failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::ParseAt { .. } => 2,
            _ => 1,
        }
    }
}
