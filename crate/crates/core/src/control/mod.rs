//! Experiment orchestration: trajectories, transport delays, controllers
//! and the 500 Hz closed loop.

mod controller;
mod delay;
mod experiment;
mod trajectory;

pub use controller::{CerebellarController, Controller, NoController, PdController, PdGains};
pub use delay::DelayLine;
pub use experiment::{
    mae, run_experiment, run_pd_baseline, ClosedLoop, CodecConfig, ControllerKind, DecoderConfig, ExperimentConfig,
    LoopConfig, Observer, Silent, StepRecord, Task, TrialRecord, T_STEP,
};
pub use trajectory::{inverse_kinematics, min_jerk, Elbow, Trajectory, TrajectoryError, TrajectoryKind, TrajectorySpec};

use thiserror::Error;

use crate::net::NetError;
use crate::plant::PlantError;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("step {step}: {source}")]
    Network { step: u64, source: NetError },
    #[error("step {step}: {source}")]
    Plant { step: u64, source: PlantError },
    #[error(transparent)]
    Build(#[from] NetError),
    #[error("plant: {0}")]
    PlantSetup(#[from] PlantError),
    #[error("output: {0}")]
    Output(String),
}

impl LoopError {
    /// True for errors raised while simulating, as opposed to setup.
    pub fn is_fault(&self) -> bool {
        matches!(self, LoopError::Network { .. } | LoopError::Plant { .. } | LoopError::Output(_))
    }
}
