use std::path::PathBuf;

use advhyp_core::Error as CoreError;
use thiserror::Error;

/// Exit status for a successful run (audit findings included).
pub const EXIT_OK: u8 = 0;
/// Exit status when a report could not be written.
pub const EXIT_IO: u8 = 1;
/// Exit status when an optimality certificate fails.
pub const EXIT_CERTIFICATE: u8 = 2;
/// Exit status for unreadable or invalid inputs.
pub const EXIT_INVALID: u8 = 3;
/// Exit status when a solver does not converge.
pub const EXIT_NON_CONVERGENCE: u8 = 4;

/// Errors raised by the experiment runner. Every variant names the file or
/// configuration field it concerns.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: cannot read: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: cannot write: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Instance {
        path: PathBuf,
        #[source]
        source: Box<CoreError>,
    },

    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Box<CoreError>,
    },
}

impl CliError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Field {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        CliError::Core {
            context: context.into(),
            source: Box::new(source),
        }
    }

    pub fn instance(path: &std::path::Path, source: CoreError) -> Self {
        CliError::Instance {
            path: path.to_path_buf(),
            source: Box::new(source),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Write { .. } => EXIT_IO,
            CliError::Core { source, .. } | CliError::Instance { source, .. } => match root(source) {
                CoreError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
                CoreError::CertificateFailed(_) => EXIT_CERTIFICATE,
                _ => EXIT_INVALID,
            },
            _ => EXIT_INVALID,
        }
    }
}

/// The innermost error behind menu-element wrappers.
fn root(e: &CoreError) -> &CoreError {
    match e {
        CoreError::Menu { source, .. } => root(source),
        other => other,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
