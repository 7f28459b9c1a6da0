//! Spiking substrate: LIF populations and static synaptic delivery.

pub mod lif;
pub mod params;
pub mod synapse;

pub use lif::{step_population, step_sparse, step_with, ActiveSet, Increment, Integrator, LifState, SpikeEvent};
pub use params::{nmda_gate, NeuronParams, Receptor};
pub use synapse::{deliver_spikes, Synapse, SynapseTable};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnnError {
    #[error("invalid neuron parameters: {0}")]
    InvalidParams(String),
    #[error("neuron {neuron}: non-finite state (integration blow-up)")]
    NonFinite { neuron: u32 },
    #[error("neuron {neuron}: negative conductance increment")]
    NegativeIncrement { neuron: u32 },
    #[error("{states} states but {incoming} increment slots")]
    LengthMismatch { states: usize, incoming: usize },
    #[error("synapse {pre} -> {post} out of range")]
    IndexOverflow { pre: usize, post: usize },
    #[error("synapse {pre} -> {post}: weight {weight} must be finite and non-negative")]
    InvalidWeight { pre: usize, post: usize, weight: f64 },
    #[error("post neuron {post} has no {receptor:?} receptor")]
    ReceptorMismatch { post: u32, receptor: Receptor },
}
