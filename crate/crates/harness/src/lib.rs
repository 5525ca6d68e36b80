//! Experiment drivers, reports and the command line of the gSQG laboratory.
//!
//! Every experiment takes a parameter struct whose `Default` is the
//! documented configuration, runs its ensembles in parallel and returns an
//! [`report::ExperimentOutput`] with verdicts, CSV series and snapshots.

pub mod cli;
pub mod experiments;
pub mod keyvalue;
pub mod report;
pub mod stats;

use gsqg_core::coercivity::CoercivityError;
use gsqg_core::noise::NoiseError;
use gsqg_core::solver::SolverError;
use gsqg_core::spectral::SpectralError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] keyvalue::ConfigError),
    /// Parameters rejected before any run starts.
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Coercivity(#[from] CoercivityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Whether the error stems from the user's input rather than a run.
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::Precondition(_))
    }
}
