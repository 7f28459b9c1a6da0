//! Cerebellar micro-complex network: topology, plastic PF-PC synapses and
//! the control-step update.

pub mod config;
pub mod network;
pub mod plasticity;
pub mod snapshot;

pub use config::{
    Channel, JointBlock, LayerOffsets, MicroComplexLayout, NetworkConfig, PopulationParams, ProjectionWeights,
    SynapseCounts,
};
pub use network::{build_network, CerebellarNetwork, HalfCounts, CONTROL_STEP_MS};
pub use plasticity::{
    kernel_value, ltd_on_cf_spike, ltp_on_pf_spike, EligibilityTraces, PfPcWeights, PlasticityParams, TRACE_FLOOR,
};

use thiserror::Error;

use crate::snn::SnnError;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("network needs {0} neurons, more than a u32 id can address")]
    IndexOverflow(u128),
    #[error("weight snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Snn(#[from] SnnError),
    #[error("{layer} layer: {source}")]
    Neuron { layer: &'static str, source: SnnError },
    #[error("no {layer} with local index {index}")]
    UnknownInput { layer: &'static str, index: usize },
}
