use std::fmt;
use std::process::ExitCode;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or incomplete configuration (exit 2).
    Config(String),
    /// Failure while running a valid experiment (exit 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(3),
        }
    }

    pub fn config(e: impl fmt::Display) -> CliError {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl fmt::Display) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fecbench_core::Error> for CliError {
    fn from(e: fecbench_core::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Runtime(e.to_string())
    }
}
