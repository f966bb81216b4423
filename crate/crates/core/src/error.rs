use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Input to a statistic had no usable variation (constant vector, too short, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("duplicate cell: {0}")]
    DuplicateCell(String),

    /// Configuration failed validation; `field` is a dotted path into the config.
    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed results file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Validation-class errors: bad arguments, configs or grids.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::OutOfDomain(_)
                | Error::DuplicateCell(_)
                | Error::Config { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
