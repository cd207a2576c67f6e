use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the stimulus, simulation, feature and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input failed validation. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// Signal too short for the filter that would be applied to it.
    #[error("signal of {len} samples is too short: at least {min_len} samples are required ({context})")]
    TooShort {
        len: usize,
        min_len: usize,
        context: String,
    },

    /// Malformed file content (epoch binary, manifest, feature CSV, config).
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for validation and format failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
