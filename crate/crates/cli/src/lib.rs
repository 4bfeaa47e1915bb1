//! The `prosody` command-line tool and its HTTP API.

pub mod commands;
pub mod server;

use std::process::ExitCode;

/// How a command ended, mapped onto the process exit status.
#[derive(Debug)]
pub enum Outcome {
    /// Exit 0.
    Success,
    /// Exit 1: some utterances failed, the rest were written.
    Partial,
}

/// A fatal error together with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CliError {
    /// Exit 2: bad arguments or configuration.
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }

    /// Exit 1: the command could not complete.
    pub fn failed(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = match error.downcast_ref::<prosody_core::Error>() {
            Some(prosody_core::Error::Config(_)) => 2,
            _ => 1,
        };
        Self { code, error }
    }
}

pub fn exit_code(result: Result<Outcome, CliError>) -> ExitCode {
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
