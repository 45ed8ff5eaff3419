use std::fmt;

use aas_core::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => EXIT_USAGE,
        // A service that answers out of contract is as unusable as one that
        // does not answer.
        Error::ContractViolation(_) => EXIT_RESOURCE,
        e if e.is_resource_error() => EXIT_RESOURCE,
        _ => EXIT_DATA,
    }
}

impl From<Error> for CliError {
    fn from(error: Error) -> Self {
        Self {
            code: exit_code(&error),
            message: error.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;
