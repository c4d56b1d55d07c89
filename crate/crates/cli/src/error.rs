use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Machine-readable failure, printed as JSON on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub module: String,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(module: &str, kind: &str, message: impl Into<String>) -> Self {
        CliError {
            module: module.into(),
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new("cli", "io", format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain strings serialize")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.module, self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a library error with the module it came from.
pub trait Context<T> {
    fn ctx(self, module: &str) -> CliResult<T>;
}

impl<T> Context<T> for bnhqc::Result<T> {
    fn ctx(self, module: &str) -> CliResult<T> {
        self.map_err(|e| CliError::new(module, e.kind(), e.to_string()))
    }
}
