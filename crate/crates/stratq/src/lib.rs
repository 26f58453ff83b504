//! Command-line front end for `stratq-core`: file formats, a parallel
//! clock sweep and subcommand dispatch.

pub mod cli;
pub mod formats;
pub mod sweep;

use std::path::Path;

pub use cli::{dispatch, Command, RunConfig};

/// Exit status for bad input: unreadable, malformed or invalid files and
/// arguments.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status when the numerical pipeline fails.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("{path}: {source}")]
    Validation { path: String, source: stratq_core::Error },
    #[error("{0}")]
    Usage(String),
    #[error("{op}: {source}")]
    Core { op: &'static str, source: stratq_core::Error },
}

impl CliError {
    pub fn validation(path: &Path, source: stratq_core::Error) -> Self {
        CliError::Validation { path: path.display().to_string(), source }
    }

    /// Wrap a failure of the named core operation.
    pub fn core(op: &'static str) -> impl FnOnce(stratq_core::Error) -> Self {
        move |source| CliError::Core { op, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}
