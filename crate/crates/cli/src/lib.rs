//! Command-line driver: trajectories and figures, verification suites and
//! constant tables, all driven by a [`config::RunConfig`].

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;

use std::fmt;

/// Failures that end a run before a verdict. All map to exit code 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(std::io::Error),
    Core(sv_process::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<sv_process::Error> for CliError {
    fn from(e: sv_process::Error) -> Self {
        CliError::Core(e)
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
