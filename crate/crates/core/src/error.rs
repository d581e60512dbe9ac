//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data or configuration failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical routine produced a non-finite value or broke down.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A mixture component lost (almost) all of its weight.
    #[error("degenerate component {component}: {reason}")]
    DegenerateComponent { component: usize, reason: String },

    /// Every restart of the EM algorithm failed.
    #[error("fit failed after {} restart(s): {}", .diagnostics.len(), .diagnostics.join("; "))]
    FitFailure { diagnostics: Vec<String> },

    /// Model selection could not produce a result.
    #[error("selection error: {0}")]
    Selection(String),

    /// Separation calibration could not bracket the target overlap.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Malformed input file.
    #[error("parse error in {file} at line {line}, column {column}: {message}")]
    Parse {
        file: String,
        line: u64,
        column: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } | Error::Domain(_) => 2,
            Error::Numerical(_)
            | Error::DegenerateComponent { .. }
            | Error::FitFailure { .. }
            | Error::Selection(_)
            | Error::Calibration(_) => 3,
            Error::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
