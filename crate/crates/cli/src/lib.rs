//! Configuration-driven runner: scenario runs, verification suites and
//! parameter sweeps over the `wavelab` core.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

use thiserror::Error;

pub use config::{RunConfig, Scenario};
pub use run::{run_scenario, RunSummary};
pub use sweep::{run_sweep, SweepRow, MAX_SWEEP_CELLS};
pub use verify::{run_suite, CheckRow, Suite};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical blowup: {0}")]
    Blowup(String),
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 failed analysis or verification, 2 config or usage,
    /// 3 numerical blowup.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Blowup(_) => 3,
            CliError::Analysis(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<wavelab::WaveError> for CliError {
    fn from(e: wavelab::WaveError) -> Self {
        match e {
            wavelab::WaveError::Blowup { .. } => CliError::Blowup(e.to_string()),
            other => CliError::Analysis(other.to_string()),
        }
    }
}
