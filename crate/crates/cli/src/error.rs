use std::path::Path;

use nibm::ErrorKind;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nibm::Error),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("rerun differs from the manifest: {0}")]
    Mismatch(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "Usage",
            CliError::Io { .. } => "Io",
            CliError::Mismatch(_) => "RerunMismatch",
            CliError::Internal(_) => "Internal",
        }
    }

    /// 2 for domain errors, 3 for numerical failures, 4 for infeasible
    /// sampling, 1 for I/O and internal errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Domain => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Infeasible => 4,
            },
            CliError::Usage(_) => 2,
            CliError::Mismatch(_) => 3,
            CliError::Io { .. } | CliError::Internal(_) => 1,
        }
    }
}
