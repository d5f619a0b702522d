//! Command implementations behind the `gaborstab` binary.
//!
//! Every command reads an optional TOML configuration ([`config`]), runs the
//! corresponding library routine and writes its results atomically into an
//! output directory together with a `manifest.json` ([`output`]).

pub mod commands;
pub mod config;
pub mod output;
pub mod suites;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

/// Process exit code for success.
pub const EXIT_OK: i32 = 0;
/// Process exit code for a failed assertion or a non-admissible pair.
pub const EXIT_FAILED: i32 = 1;
/// Process exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("{0}")]
    Library(#[from] gaborstab::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Configuration and usage errors map to [`EXIT_CONFIG`]; library
    /// parameter errors are configuration errors too, since every library
    /// input comes from the configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Library(e) => match e {
                gaborstab::Error::InvalidParameter { .. }
                | gaborstab::Error::NotAdmissible(_)
                | gaborstab::Error::GridTooCoarse { .. }
                | gaborstab::Error::ExceedsNyquist { .. }
                | gaborstab::Error::OutsideGrid(_)
                | gaborstab::Error::NoControlFunction(_)
                | gaborstab::Error::NoClosedForm(_) => EXIT_CONFIG,
                _ => EXIT_FAILED,
            },
            CliError::Io { .. } | CliError::Json(_) => EXIT_FAILED,
        }
    }
}

/// What a command produced: the files it wrote and whether its checks passed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_FAILED
        }
    }
}
