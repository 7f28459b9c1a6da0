//! The controlled body: series-elastic joints, either decoupled or driving a
//! planar two-link arm, plus scripted perturbations and the safety supervisor.

mod dynamics;
mod perturb;
mod supervisor;

pub use dynamics::{
    end_effector, jacobian, link_inertia, mechanical_energy, step_plant, Overlay, Plant, PlantConfig, PlantKind,
    PlantState, SeaJointParams, TwoLinkParams, JointState, Band,
};
pub use perturb::{Perturbation, PerturbationScript, ScriptState};
pub use supervisor::{supervise, SupervisorParams};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlantError {
    #[error("invalid plant configuration: {0}")]
    InvalidConfig(String),
    #[error("plant state became non-finite (integration unstable)")]
    NonFinite,
    #[error("singular inertia matrix (det = {0})")]
    Singular(f64),
    #[error("expected {expected} joint values, got {got}")]
    JointCount { expected: usize, got: usize },
}
