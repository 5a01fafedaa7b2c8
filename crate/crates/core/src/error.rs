use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller passed inconsistent or malformed arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The request is mathematically impossible (e.g. a coupling that
    /// violates the triangle rule).
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal self-check failed. Indicates a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Store(#[from] StoreError),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

/// Syntax or semantic error in a space specification string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    /// Byte offset into the original (unstripped) input.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: not an ICTB1 container")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed header: {0}")]
    Header(String),

    #[error("layout error in object `{object}`: {reason}")]
    Layout { object: String, reason: String },

    #[error("object `{object}` is truncated")]
    Truncated { object: String },

    #[error("crc mismatch in object `{object}` (expected {expected:08x}, found {found:08x})")]
    Crc { object: String, expected: u32, found: u32 },
}
