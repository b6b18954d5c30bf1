use std::path::PathBuf;

use thiserror::Error;

pub type ToolResult<T> = Result<T, ToolError>;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Domain(#[from] recourse_core::Error),
}

impl ToolError {
    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        ToolError::Io { path: path.into(), message: err.to_string() }
    }

    /// Process exit code: 2 for configuration problems, 3 for domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Io { .. } | ToolError::Config(_) | ToolError::Format(_) => 2,
            ToolError::Domain(_) => 3,
        }
    }
}
