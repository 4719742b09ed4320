use std::io;

use thiserror::Error;

use crate::geometry::Resolution;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pixel ({col}, {row}) outside {resolution} frame")]
    PixelOutOfRange {
        col: usize,
        row: usize,
        resolution: Resolution,
    },

    #[error("resolution mismatch: expected {expected}, found {found}")]
    ResolutionMismatch {
        expected: Resolution,
        found: Resolution,
    },

    #[error("empty window")]
    EmptyWindow,

    #[error("mask has zero area")]
    ZeroMaskArea,

    #[error("trace: {0}")]
    Trace(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True when the failure came from the filesystem rather than from the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
