use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Invalid,
    Numerical,
    Resource,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("critical point: {0}")]
    Singular(String),

    #[error("degenerate magnetization: {0}")]
    DegenerateMagnetization(String),

    #[error("degenerate susceptibility: {0}")]
    DegenerateSusceptibility(String),

    #[error("degenerate well restriction: {0}")]
    DegenerateRestriction(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("too few points: {0}")]
    Arity(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Usage(_) => ErrorKind::Usage,
            Error::InvalidParams(_) | Error::InvalidSample(_) | Error::Domain(_) | Error::Arity(_) => {
                ErrorKind::Invalid
            }
            Error::Numerical(_)
            | Error::Singular(_)
            | Error::DegenerateMagnetization(_)
            | Error::DegenerateSusceptibility(_)
            | Error::DegenerateRestriction(_) => ErrorKind::Numerical,
            Error::Resource(_) => ErrorKind::Resource,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
