//! Configuration-driven orchestration for the margin-risk laboratory:
//! parse a flat key=value experiment config, run the requested sweep
//! (bound tables, Monte Carlo rate estimation, lower-bound reports,
//! boundary regression, verification battery) and emit deterministic CSV.

pub mod config;
pub mod report;
pub mod sweep;

use std::fmt;

/// CLI-level errors carrying the exit-code split: configuration problems
/// exit with 1, runtime failures with 2.
#[derive(Debug)]
pub enum CliError {
    Config { line: Option<usize>, message: String },
    Runtime(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { line: None, message: message.into() }
    }

    pub fn config_at(line: usize, message: impl Into<String>) -> Self {
        CliError::Config { line: Some(line), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { line: Some(line), message } => {
                write!(f, "config error (line {line}): {message}")
            }
            CliError::Config { line: None, message } => write!(f, "config error: {message}"),
            CliError::Runtime(message) => write!(f, "runtime error: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<marginlab_core::Error> for CliError {
    fn from(e: marginlab_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
