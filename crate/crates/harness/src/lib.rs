//! Experiments comparing agents that learn alone with agents that take advice.
//!
//! [`experiment::run_experiment`] runs the arms for each seed, computes
//! [`metrics::MetricsSummary`] per arm and writes per-episode CSVs, an
//! aggregate CSV, a summary CSV and a manifest.

pub mod experiment;
pub mod metrics;
pub mod world;

use hyperttt_agent::AgentError;
use hyperttt_core::policy::CheckpointError;
use hyperttt_service::ServiceError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("could not launch: {0}")]
    Launch(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seed {seed} arm {arm} aborted after {completed} episodes: {cause}")]
    Aborted {
        seed: u64,
        arm: String,
        completed: usize,
        cause: String,
    },
}
