//! Sweep orchestration and table emission for the `sqsplit` binary.
//!
//! Every command resolves its flags into a [`SweepConfig`], evaluates the
//! requested time points on a rayon pool, gathers the rows in input order and
//! renders them with a single writer. Output bytes depend only on the resolved
//! configuration, never on the thread count.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    criteria_rows, entanglement_rows, state_dump, verify, wigner_frames, VerifyCase, VerifyReport, WignerFrame,
    WignerRequest, MIXED_ENTANGLEMENT_MAX_N, VERIFY_MAX_N, VERIFY_TIMES, WIGNER_MAX_N,
};
pub use config::{thread_count, Format, Mode, Overrides, SweepConfig, WignerKind};

use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Assertion(String),
    Core(sqsplit_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Assertion(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<sqsplit_core::Error> for CliError {
    fn from(e: sqsplit_core::Error) -> Self {
        match e {
            sqsplit_core::Error::InvalidInput(m) => CliError::Usage(m),
            e @ sqsplit_core::Error::TooLarge { .. } => CliError::Usage(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
