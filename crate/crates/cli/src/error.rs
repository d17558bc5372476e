//! Failures of a command and their exit codes.

use std::fmt;

use shs_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Malformed or unreadable input; exit code 2.
    Config { at: String, reason: String },
    /// A standing assumption does not hold; exit code 1.
    Assumption(String),
    /// A computation stage failed; exit code 3.
    Stage { stage: String, reason: String },
}

impl CliError {
    pub fn config(at: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            at: at.into(),
            reason: reason.into(),
        }
    }

    pub fn stage(stage: impl Into<String>, reason: impl fmt::Display) -> Self {
        CliError::Stage {
            stage: stage.into(),
            reason: reason.to_string(),
        }
    }

    /// Input and dimension errors are configuration errors, assumption and
    /// precondition failures are assumption errors.
    pub fn from_core(e: Error) -> Self {
        match e {
            Error::Input { field, reason } => CliError::Config { at: field, reason },
            Error::Dimension(reason) => CliError::config("dimensions", reason),
            Error::Domain { .. } => CliError::config("time", e.to_string()),
            Error::Assumption(s) | Error::Precondition(s) => CliError::Assumption(s),
            other => CliError::stage("compute", other),
        }
    }

    /// Tags a core error with the stage that produced it.
    pub fn in_stage(stage: &str) -> impl Fn(Error) -> CliError + '_ {
        move |e| match CliError::from_core(e) {
            CliError::Stage { reason, .. } => CliError::stage(stage, reason),
            other => other,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::stage("output", format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assumption(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Stage { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { at, reason } => write!(f, "config error at {at}: {reason}"),
            CliError::Assumption(s) => write!(f, "assumption failed: {s}"),
            CliError::Stage { stage, reason } => write!(f, "stage '{stage}' failed: {reason}"),
        }
    }
}

impl std::error::Error for CliError {}
