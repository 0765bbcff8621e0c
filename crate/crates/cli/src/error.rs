use std::path::Path;

use dynsim_core::{Error as CoreError, Stage};

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, missing or malformed input, unwritable output.
    #[error("{0}")]
    Input(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("optimization failed: {0}")]
    Optimization(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Generation(_) => 3,
            CliError::Optimization(_) => 4,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    /// Invalid parameters are configuration errors; anything else raised
    /// while simulating is a generation failure.
    pub fn from_generation(err: CoreError) -> Self {
        match err.root() {
            CoreError::InvalidArgument(_) => CliError::Input(err.to_string()),
            _ => CliError::Generation(err.to_string()),
        }
    }

    /// Alignment-stage errors are optimization failures; errors in earlier
    /// stages come from the inputs.
    pub fn from_pipeline(err: CoreError) -> Self {
        match err.stage() {
            Some(Stage::Alignment) => CliError::Optimization(err.to_string()),
            _ => CliError::Input(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
