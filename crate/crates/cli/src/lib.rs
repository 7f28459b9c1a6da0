//! Configuration loading, runs, sweeps and result files for the closed-loop
//! cerebellar controller.

pub mod config;
pub mod output;
pub mod runner;
pub mod sweep;

use cerebellar::control::LoopError;
use thiserror::Error;

pub use config::{load_config, OutputConfig, RunConfig, TraceLevel};
pub use runner::{run, RunOutcome};
pub use sweep::{sweep, Grid};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("simulation fault: {0}")]
    Fault(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn from_loop(e: LoopError) -> Self {
        if e.is_fault() {
            CliError::Fault(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }

    /// Process exit status: 1 for anything wrong with the input, 2 for
    /// anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid(_) => 1,
            CliError::Fault(_) | CliError::Io(_) => 2,
        }
    }
}
