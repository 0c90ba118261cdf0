use std::fmt;

use rough_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;
pub const EXIT_OUTPUT: i32 = 6;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or a config that violates the schema.
    Usage(String),
    /// Unreadable or malformed input files.
    Input(String),
    /// Failure to write outputs.
    Output(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Parse { .. } => CliError::Input(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Output(_) => EXIT_OUTPUT,
            CliError::Core(Error::NotConverged { .. }) => EXIT_NOT_CONVERGED,
            CliError::Core(_) => EXIT_NUMERICAL,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Output(_) => "output",
            CliError::Core(Error::NotConverged { .. }) => "not_converged",
            CliError::Core(_) => "numerical",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Output(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}
