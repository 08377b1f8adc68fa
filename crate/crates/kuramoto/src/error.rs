use kuramoto_core::Error as CoreError;

/// Failures grouped by exit code: 2 validation, 3 numeric, 1 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("numerical failure: {0}")]
    Numeric(CoreError),
    #[error("I/O error: {0:#}")]
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. } | CoreError::UnsupportedKind { .. } => CliError::Validation(vec![e.to_string()]),
            other => CliError::Numeric(other),
        }
    }
}
