//! Failure classes and their process exit codes.

use std::fmt;

pub const USAGE: i32 = 2;
pub const DATA: i32 = 3;
pub const NUMERICAL: i32 = 4;

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self { code: USAGE, error: error.into() }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Self { code: DATA, error: error.into() }
    }

    pub fn numerical(error: impl Into<anyhow::Error>) -> Self {
        Self { code: NUMERICAL, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Library errors are data errors except for solver failures.
impl From<msavg::Error> for Failure {
    fn from(e: msavg::Error) -> Self {
        match e {
            msavg::Error::NonConvergence { .. } => Self::numerical(e),
            _ => Self::data(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
