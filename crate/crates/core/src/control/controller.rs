//! Torque controllers: the spiking cerebellum and a PD baseline.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codecs::{encode_cf, encode_mf, estimate_error, CfRates, DcnDecoder, JointRange, JointSample};
use crate::net::{CerebellarNetwork, HalfCounts, NetError, CONTROL_STEP_MS};
use crate::snn::SpikeEvent;

/// One control step's decision.
pub trait Controller {
    /// Write the torque command for `signals` (sensed state against current
    /// desired state). `counts` receives nuclear spike counts when the
    /// controller has any.
    fn command(
        &mut self,
        signals: &[JointSample],
        plastic: bool,
        spikes: Option<&mut Vec<SpikeEvent>>,
        torque: &mut [f64],
        counts: &mut [HalfCounts],
    ) -> Result<(), NetError>;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdGains {
    /// N·m/rad
    pub kp: Vec<f64>,
    /// N·m·s/rad
    pub kd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PdController {
    pub gains: PdGains,
}

impl Controller for PdController {
    fn command(
        &mut self,
        signals: &[JointSample],
        _plastic: bool,
        _spikes: Option<&mut Vec<SpikeEvent>>,
        torque: &mut [f64],
        counts: &mut [HalfCounts],
    ) -> Result<(), NetError> {
        for (j, s) in signals.iter().enumerate() {
            torque[j] = self.gains.kp[j] * (s.q_d - s.q_a) + self.gains.kd[j] * (s.qd_d - s.qd_a);
        }
        counts.iter_mut().for_each(|c| *c = HalfCounts::default());
        Ok(())
    }
}

/// Emits zero torque: the uncontrolled plant.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoController;

impl Controller for NoController {
    fn command(
        &mut self,
        _signals: &[JointSample],
        _plastic: bool,
        _spikes: Option<&mut Vec<SpikeEvent>>,
        torque: &mut [f64],
        counts: &mut [HalfCounts],
    ) -> Result<(), NetError> {
        torque.iter_mut().for_each(|t| *t = 0.0);
        counts.iter_mut().for_each(|c| *c = HalfCounts::default());
        Ok(())
    }
}

/// Encoders, network and decoder wired as one controller.
#[derive(Debug, Clone)]
pub struct CerebellarController {
    pub net: CerebellarNetwork,
    pub decoder: DcnDecoder,
    pub rates: CfRates,
    pub k_v: f64,
    pub ranges: Vec<JointRange>,
    rng: ChaCha8Rng,
    mf: Vec<usize>,
    cf: Vec<usize>,
    eps: Vec<f64>,
}

impl CerebellarController {
    pub fn new(
        net: CerebellarNetwork,
        decoder: DcnDecoder,
        rates: CfRates,
        k_v: f64,
        ranges: Vec<JointRange>,
        rng: ChaCha8Rng,
    ) -> Self {
        CerebellarController { net, decoder, rates, k_v, ranges, rng, mf: Vec::new(), cf: Vec::new(), eps: Vec::new() }
    }

    /// Error of the last step, rad per joint.
    pub fn last_error(&self) -> &[f64] {
        &self.eps
    }
}

impl Controller for CerebellarController {
    fn command(
        &mut self,
        signals: &[JointSample],
        plastic: bool,
        spikes: Option<&mut Vec<SpikeEvent>>,
        torque: &mut [f64],
        counts: &mut [HalfCounts],
    ) -> Result<(), NetError> {
        let layout = self.net.layout();
        encode_mf(signals, &self.ranges, layout, &mut self.mf);
        estimate_error(signals, self.k_v, &mut self.eps);
        encode_cf(&self.eps, &self.rates, layout, &mut self.rng, CONTROL_STEP_MS / 1000.0, &mut self.cf);
        let c = self.net.step(&self.mf, &self.cf, plastic, spikes)?;
        counts.copy_from_slice(c);
        self.decoder.decode(c, torque);
        Ok(())
    }
}
