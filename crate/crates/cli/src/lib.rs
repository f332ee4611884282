//! Support code for the `bellpoly` command: scenario files, CSV output and
//! the exit-code contract.

pub mod csv;
pub mod file;

use std::fmt;

pub const EXIT_OK: i32 = 0;
/// Membership: the vector lies outside the polytope.
pub const EXIT_OUTSIDE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Input(String),
    Capacity(String),
    Io(String),
}

impl CliError {
    pub fn from_core(e: bellpoly::Error) -> Self {
        match e {
            bellpoly::Error::Capacity { .. } => CliError::Capacity(e.to_string()),
            bellpoly::Error::NumericalDegeneracy { .. } => CliError::Capacity(format!("{e}; try --exact")),
            other => CliError::Input(other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Io(_) => EXIT_IO,
        }
    }

    /// Prefix the message with where it happened.
    pub fn context(self, what: &str) -> Self {
        let wrap = |m: String| format!("{what}: {m}");
        match self {
            CliError::Input(m) => CliError::Input(wrap(m)),
            CliError::Capacity(m) => CliError::Capacity(wrap(m)),
            CliError::Io(m) => CliError::Io(wrap(m)),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Capacity(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bellpoly::Error> for CliError {
    fn from(e: bellpoly::Error) -> Self {
        CliError::from_core(e)
    }
}
