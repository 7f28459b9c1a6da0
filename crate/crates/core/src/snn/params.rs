//! Physiological constants for the three conductance-based LIF populations.

use serde::{Deserialize, Serialize};

use super::SnnError;

/// Synaptic receptor type. NMDA shares the AMPA reversal potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receptor {
    Ampa,
    Nmda,
    Gaba,
}

impl Receptor {
    pub const ALL: [Receptor; 3] = [Receptor::Ampa, Receptor::Nmda, Receptor::Gaba];
}

/// Constants of one neuron population. Units: pF, nS, mV, ms.
///
/// A receptor whose time constant is `None` is disabled for the population:
/// it never accumulates conductance and contributes no current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub c_m: f64,
    pub g_l: f64,
    pub e_l: f64,
    pub e_ampa: f64,
    pub e_gaba: Option<f64>,
    pub tau_ampa: Option<f64>,
    pub tau_nmda: Option<f64>,
    pub tau_gaba: Option<f64>,
    pub v_thr: f64,
    pub t_ref: f64,
}

impl NeuronParams {
    /// Granule cell: AMPA input only.
    pub const fn granule() -> Self {
        NeuronParams {
            c_m: 2.0,
            g_l: 1.0,
            e_l: -65.0,
            e_ampa: 0.0,
            e_gaba: None,
            tau_ampa: Some(1.0),
            tau_nmda: None,
            tau_gaba: None,
            v_thr: -50.0,
            t_ref: 1.0,
        }
    }

    /// Purkinje cell: AMPA input only (parallel and climbing fibres).
    pub const fn purkinje() -> Self {
        NeuronParams {
            c_m: 100.0,
            g_l: 6.0,
            e_l: -70.0,
            e_ampa: 0.0,
            e_gaba: None,
            tau_ampa: Some(1.2),
            tau_nmda: None,
            tau_gaba: None,
            v_thr: -52.0,
            t_ref: 2.0,
        }
    }

    /// Deep cerebellar nucleus cell: AMPA, NMDA and GABA.
    pub const fn nuclear() -> Self {
        NeuronParams {
            c_m: 2.0,
            g_l: 0.2,
            e_l: -70.0,
            e_ampa: 0.0,
            e_gaba: Some(-80.0),
            tau_ampa: Some(0.5),
            tau_nmda: Some(14.0),
            tau_gaba: Some(10.0),
            v_thr: -40.0,
            t_ref: 1.0,
        }
    }

    pub fn tau(&self, receptor: Receptor) -> Option<f64> {
        match receptor {
            Receptor::Ampa => self.tau_ampa,
            Receptor::Nmda => self.tau_nmda,
            Receptor::Gaba => self.tau_gaba,
        }
    }

    pub fn has_receptor(&self, receptor: Receptor) -> bool {
        self.tau(receptor).is_some()
    }

    pub fn validate(&self) -> Result<(), SnnError> {
        let bad = |what: &str| Err(SnnError::InvalidParams(what.to_string()));
        if !(self.c_m > 0.0) {
            return bad("c_m must be positive");
        }
        if !(self.g_l > 0.0) {
            return bad("g_l must be positive");
        }
        if !(self.e_l < self.v_thr) {
            return bad("e_l must lie below v_thr");
        }
        if !(self.t_ref >= 0.0) {
            return bad("t_ref must be non-negative");
        }
        for r in Receptor::ALL {
            if let Some(tau) = self.tau(r) {
                if !(tau > 0.0) {
                    return bad("receptor time constants must be positive");
                }
            }
        }
        if self.tau_gaba.is_some() && self.e_gaba.is_none() {
            return bad("GABA receptor enabled without a reversal potential");
        }
        Ok(())
    }
}

/// Magnesium-block activation of the NMDA channel, `v` in mV.
#[inline]
pub fn nmda_gate(v: f64) -> f64 {
    1.0 / (1.0 + (-0.062 * v).exp() * (1.2 / 3.57))
}
