//! Closed-loop experiments on the simulated energy hub: data collection,
//! DeePC and rule-based episodes, metrics and reports.

pub mod collect;
pub mod compare;
pub mod config;
pub mod episode;
pub mod metrics;
pub mod plant;

use deepc_core::{DeepcController, DeepcError, HubLayout, PeReport, TrajectoryError};
use deepc_sim::SimError;
use thiserror::Error;

pub use collect::{collect_data, collect_trajectory, pe_report, CollectedData, Excitation, PrbsSeeds};
pub use compare::{compare_report, Comparison};
pub use config::ScenarioConfig;
pub use episode::{run_episode, Controller, EpisodeLog, LogHeader, StepRecord};
pub use metrics::{compute_prediction_error, compute_violation_metrics, MetricsReport, PredictionError};
pub use plant::{Actuation, Plant};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("collected data is not persistently exciting ({0}); re-seed the collection")]
    NotExciting(PeReport),
    #[error("log holds no plan predictions")]
    MissingPredictions,
    #[error("reports come from different scenarios: {0}")]
    ScenarioMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Deepc(#[from] DeepcError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// DeePC controller for the hub on collected data.
pub fn build_controller(cfg: &ScenarioConfig, data: &CollectedData) -> Result<DeepcController, HarnessError> {
    Ok(DeepcController::new(data.blocks.clone(), HubLayout::energy_hub(), cfg.deepc.clone(), cfg.comfort.clone())?)
}
