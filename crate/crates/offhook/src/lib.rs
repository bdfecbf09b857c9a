//! Command-line front end for the off-hooked two-trailer vehicle.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::fmt;

use offhook_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// A failure carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn verification(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_VERIFICATION,
            message: msg.to_string(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }

    pub fn numerical(msg: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: msg.to_string(),
        }
    }

    /// Unwritable outputs are reported as configuration errors.
    pub fn io(msg: impl fmt::Display) -> Self {
        Self::config(msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BlowUp { .. } | Error::NonFinite | Error::SingularTransform(_) => {
                CliError::numerical(e)
            }
            _ => CliError::config(e),
        }
    }
}
