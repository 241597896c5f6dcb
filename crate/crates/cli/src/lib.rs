//! Library side of the `nonlocal` command: argument definitions, command
//! implementations and the run report.

pub mod args;
pub mod commands;
pub mod report;

use std::fmt;

/// Exit status for malformed input (bad flags, unreadable or invalid data).
pub const EXIT_INPUT: i32 = 2;
/// Exit status for failures that are not the caller's fault.
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nonlocal_core::Error> for CliError {
    fn from(e: nonlocal_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
