//! Parallel-fibre to Purkinje-cell plasticity.
//!
//! Every PF spike potentiates all of that fibre's synapses by a fixed step.
//! Every CF spike depresses the synapses onto its Purkinje cell in proportion
//! to each fibre's eligibility: the fibre's spike history filtered by
//!
//! ```text
//! k(lag) = 0                          for lag >= -d_k
//! k(lag) = (s / τk) · exp(1 - s / τk) for lag <  -d_k,  s = -(lag + d_k), τk = τ_ltd - d_k
//! ```
//!
//! where `lag = t_pf - t_cf`. The kernel peaks at exactly 1 when
//! `lag = -τ_ltd`. It factors into a pure delay of `d_k` followed by an
//! alpha filter with time constant `τk`, which [`EligibilityTraces`] realises
//! with a ring of delayed spikes and two exponential accumulators per fibre.

use serde::{Deserialize, Serialize};

use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlasticityParams {
    /// Potentiation per PF spike, nS.
    pub alpha_ltp: f64,
    /// Depression scale per CF spike at unit eligibility, nS (negative).
    pub beta_ltd: f64,
    /// Lag of the kernel peak, ms.
    pub tau_ltd: f64,
    /// Kernel dead time, ms.
    pub d_k: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        PlasticityParams { alpha_ltp: 0.002, beta_ltd: -0.001, tau_ltd: 100.0, d_k: 70.0, w_min: 0.0, w_max: 5.0 }
    }
}

impl PlasticityParams {
    /// Width parameter of the alpha filter, `τ_ltd - d_k`.
    pub fn tau_k(&self) -> f64 {
        self.tau_ltd - self.d_k
    }

    pub fn validate(&self, initial_weight: f64) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::InvalidConfig(m.to_string()));
        if !(self.d_k > 0.0 && self.tau_ltd > self.d_k) {
            return bad("plasticity requires tau_ltd > d_k > 0");
        }
        if !(self.alpha_ltp >= 0.0 && self.alpha_ltp.is_finite()) {
            return bad("alpha_ltp must be finite and non-negative");
        }
        if !(self.beta_ltd <= 0.0 && self.beta_ltd.is_finite()) {
            return bad("beta_ltd must be finite and non-positive");
        }
        if !(self.w_min < initial_weight && initial_weight < self.w_max) {
            return bad("initial PF-PC weight must lie strictly inside [w_min, w_max]");
        }
        Ok(())
    }
}

/// Kernel weight of a PF spike at `lag = t_pf - t_cf` (ms).
pub fn kernel_value(lag: f64, params: &PlasticityParams) -> f64 {
    if lag >= -params.d_k {
        return 0.0;
    }
    let x = -(lag + params.d_k) / params.tau_k();
    x * (1.0 - x).exp()
}

/// Traces below this value are dropped from the active set and zeroed.
pub const TRACE_FLOOR: f64 = 1e-14;

/// One eligibility trace per parallel fibre, shared by every Purkinje cell
/// the fibre contacts.
#[derive(Debug, Clone)]
pub struct EligibilityTraces {
    decay: f64,
    gain: f64,
    fast: Vec<f64>,
    slow: Vec<f64>,
    active: Vec<u32>,
    is_active: Vec<bool>,
    pending: Vec<Vec<u32>>,
    step: u64,
}

impl EligibilityTraces {
    /// Traces for `n_pf` fibres advanced in substeps of `dt` ms. `d_k` must
    /// be a whole number of substeps.
    pub fn new(n_pf: usize, params: &PlasticityParams, dt: f64) -> Result<Self, NetError> {
        let delay = params.d_k / dt;
        if !(dt > 0.0) || (delay - delay.round()).abs() > 1e-9 {
            return Err(NetError::InvalidConfig("d_k must be a whole number of substeps".into()));
        }
        let delay = delay.round() as usize;
        Ok(EligibilityTraces {
            decay: (-dt / params.tau_k()).exp(),
            gain: dt / params.tau_k(),
            fast: vec![0.0; n_pf],
            slow: vec![0.0; n_pf],
            active: Vec::new(),
            is_active: vec![false; n_pf],
            pending: vec![Vec::new(); delay],
            step: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.fast.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fast.is_empty()
    }

    /// Substeps advanced so far.
    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Fibres whose trace may be non-zero.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    /// Kernel-weighted spike history of fibre `pf` at the current time.
    #[inline]
    pub fn value(&self, pf: usize) -> f64 {
        std::f64::consts::E * self.slow[pf]
    }

    /// Move one substep forward. `spikes` are the PF spikes stamped at the
    /// new current time; they enter the filter `d_k` later.
    pub fn advance(&mut self, spikes: &[u32]) {
        let (d, g) = (self.decay, self.gain);
        let mut i = 0;
        while i < self.active.len() {
            let pf = self.active[i] as usize;
            let a = self.fast[pf];
            let b = (self.slow[pf] + a * g) * d;
            let a = a * d;
            if a < TRACE_FLOOR && b < TRACE_FLOOR {
                self.fast[pf] = 0.0;
                self.slow[pf] = 0.0;
                self.is_active[pf] = false;
                self.active.swap_remove(i);
            } else {
                self.fast[pf] = a;
                self.slow[pf] = b;
                i += 1;
            }
        }
        self.step += 1;
        if self.pending.is_empty() {
            for &pf in spikes {
                self.arrive(pf);
            }
            return;
        }
        let slot = (self.step % self.pending.len() as u64) as usize;
        let arrivals = std::mem::take(&mut self.pending[slot]);
        for &pf in &arrivals {
            self.arrive(pf);
        }
        let mut reuse = arrivals;
        reuse.clear();
        reuse.extend_from_slice(spikes);
        self.pending[slot] = reuse;
    }

    #[inline]
    fn arrive(&mut self, pf: u32) {
        let i = pf as usize;
        self.fast[i] += 1.0;
        if !self.is_active[i] {
            self.is_active[i] = true;
            self.active.push(pf);
        }
    }
}

/// Dense plastic weight store, row-major by parallel fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct PfPcWeights {
    n_pf: usize,
    n_pc: usize,
    w: Vec<f64>,
}

impl PfPcWeights {
    pub fn filled(n_pf: usize, n_pc: usize, value: f64) -> Self {
        PfPcWeights { n_pf, n_pc, w: vec![value; n_pf * n_pc] }
    }

    pub fn from_vec(n_pf: usize, n_pc: usize, w: Vec<f64>) -> Result<Self, NetError> {
        if w.len() != n_pf * n_pc {
            return Err(NetError::Snapshot(format!("expected {} weights, got {}", n_pf * n_pc, w.len())));
        }
        Ok(PfPcWeights { n_pf, n_pc, w })
    }

    pub fn n_pf(&self) -> usize {
        self.n_pf
    }

    pub fn n_pc(&self) -> usize {
        self.n_pc
    }

    #[inline]
    pub fn get(&self, pf: usize, pc: usize) -> f64 {
        self.w[pf * self.n_pc + pc]
    }

    pub fn set(&mut self, pf: usize, pc: usize, value: f64) {
        self.w[pf * self.n_pc + pc] = value;
    }

    #[inline]
    pub fn row(&self, pf: usize) -> &[f64] {
        &self.w[pf * self.n_pc..(pf + 1) * self.n_pc]
    }

    #[inline]
    pub fn row_mut(&mut self, pf: usize) -> &mut [f64] {
        &mut self.w[pf * self.n_pc..(pf + 1) * self.n_pc]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// Smallest and largest weight.
    pub fn range(&self) -> (f64, f64) {
        self.w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }
}

/// Potentiate every synapse of fibre `pf`, saturating at `w_max`.
#[inline]
pub fn ltp_on_pf_spike(pf: usize, weights: &mut PfPcWeights, params: &PlasticityParams) {
    let (a, hi) = (params.alpha_ltp, params.w_max);
    for w in weights.row_mut(pf) {
        *w = (*w + a).min(hi);
    }
}

/// Depress the synapses onto Purkinje cell `pc` by `β · trace`, saturating at `w_min`.
pub fn ltd_on_cf_spike(pc: usize, traces: &EligibilityTraces, weights: &mut PfPcWeights, params: &PlasticityParams) {
    let n_pc = weights.n_pc;
    for &pf in traces.active() {
        let e = traces.value(pf as usize);
        if e == 0.0 {
            continue;
        }
        let w = &mut weights.w[pf as usize * n_pc + pc];
        *w = (*w + params.beta_ltd * e).clamp(params.w_min, params.w_max);
    }
}
