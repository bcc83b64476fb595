//! Data-driven predictive control for a heat-pump, battery and multi-zone
//! building hub.
//!
//! Recorded input/output data ([`Trajectory`]) is arranged into Hankel blocks
//! ([`HankelBlocks`]); the controller ([`DeepcController`]) uses them as a
//! non-parametric predictor inside a convex QP solved by `deepc-qp`.

pub mod assemble;
pub mod config;
pub mod controller;
pub mod excitation;
pub mod hankel;
pub mod layout;
pub mod trajectory;

use deepc_qp::{QpError, QuadraticProgram, SolveStatus};
use thiserror::Error;

pub use assemble::{assemble_deepc_qp, DeepcProblem, StepRequest, VarLayout};
pub use config::{comfort_bounds_at, ComfortSchedule, DeepcConfig, TariffProfile};
pub use controller::{deepc_step, ControlPlan, DeepcController, WarmStart};
pub use excitation::{check_persistent_excitation, PeReport, RANK_RTOL};
pub use hankel::{build_hankel, partition_hankel, HankelBlocks};
pub use layout::{HubLayout, InputRole, OutputRole};
pub use trajectory::{ChannelInfo, SignalDims, Trajectory, TrajectoryMeta};

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("a trajectory needs at least one input and one output channel")]
    EmptyChannels,
    #[error("a trajectory needs at least one sample")]
    Empty,
    #[error("inputs have {inputs} samples but outputs have {outputs}")]
    LengthMismatch { inputs: usize, outputs: usize },
    #[error("sample {t} has {m} inputs and {p} outputs, inconsistent with sample 0")]
    RaggedSample { t: usize, m: usize, p: usize },
    #[error("sample time must be positive, got {0}")]
    SampleTime(f64),
    #[error("window length {window} exceeds trajectory length {length}")]
    WindowTooLong { window: usize, length: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("metadata: {0}")]
    Metadata(String),
}

#[derive(Debug, Error)]
pub enum DeepcError {
    #[error("history holds {got} samples, {needed} required")]
    ShortHistory { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver returned {status} (KKT residual {kkt:e})")]
    Solver {
        status: SolveStatus,
        kkt: f64,
        /// The complete problem of the failed step, for offline inspection.
        qp: Box<QuadraticProgram>,
    },
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}
