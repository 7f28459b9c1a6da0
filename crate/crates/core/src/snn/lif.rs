//! Conductance-based leaky integrate-and-fire dynamics.
//!
//! Each substep first decays the three conductances in closed form and adds
//! the synaptic increments that arrived at the substep start, then advances
//! the membrane potential with exponential Euler while the conductances are
//! held at those values. With the conductances frozen the membrane equation
//! is linear, so the threshold crossing time inside a substep is solved
//! analytically and the refractory clock starts at the true crossing. The
//! emitted [`SpikeEvent`] is stamped at the end of the substep.
//!
//! The NMDA magnesium gate depends on V, so populations with NMDA enabled
//! re-evaluate the gate on a few internal micro-intervals per substep
//! (midpoint predictor on each).

use super::params::{nmda_gate, NeuronParams, Receptor};
use super::SnnError;

/// Conductances below this value (nS) are flushed to zero so that silent
/// neurons return to an exact resting state and can be skipped.
pub const CONDUCTANCE_FLOOR: f64 = 1e-12;
/// Distance from `e_l` (mV) under which a conductance-free neuron is snapped
/// back onto its resting potential.
pub const REST_SNAP: f64 = 1e-9;

/// Per-neuron dynamic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifState {
    /// Membrane potential, mV.
    pub v: f64,
    pub g_ampa: f64,
    pub g_nmda: f64,
    pub g_gaba: f64,
    /// Simulation time (ms) until which the neuron is held at `e_l`.
    pub refractory_until: f64,
}

impl LifState {
    pub fn at_rest(params: &NeuronParams) -> Self {
        LifState {
            v: params.e_l,
            g_ampa: 0.0,
            g_nmda: 0.0,
            g_gaba: 0.0,
            refractory_until: f64::NEG_INFINITY,
        }
    }

    /// At rest with no conductance and not refractory: advancing it without
    /// input is a no-op.
    pub fn is_quiescent(&self, params: &NeuronParams, now: f64) -> bool {
        self.v == params.e_l
            && self.g_ampa == 0.0
            && self.g_nmda == 0.0
            && self.g_gaba == 0.0
            && self.refractory_until <= now
    }
}

/// Conductance increments (nS) arriving at one neuron at the start of a substep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Increment {
    pub ampa: f64,
    pub nmda: f64,
    pub gaba: f64,
}

impl Increment {
    #[inline]
    pub fn add(&mut self, receptor: Receptor, weight: f64) {
        match receptor {
            Receptor::Ampa => self.ampa += weight,
            Receptor::Nmda => self.nmda += weight,
            Receptor::Gaba => self.gaba += weight,
        }
    }

    pub fn get(&self, receptor: Receptor) -> f64 {
        match receptor {
            Receptor::Ampa => self.ampa,
            Receptor::Nmda => self.nmda,
            Receptor::Gaba => self.gaba,
        }
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.ampa == 0.0 && self.nmda == 0.0 && self.gaba == 0.0
    }
}

/// A spike of neuron `neuron_id` (global index) at `time` ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub neuron_id: u32,
    pub time: f64,
}

/// Substep integrator for one population: caches the per-receptor decay
/// factors for a fixed substep length.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: NeuronParams,
    dt: f64,
    decay: [f64; 3],
    /// Receptor present, in AMPA, NMDA, GABA order.
    enabled: [bool; 3],
    micro: usize,
}

/// Internal micro-intervals per substep for NMDA-bearing neurons.
pub const NMDA_MICROSTEPS: usize = 8;

impl Integrator {
    pub fn new(params: NeuronParams, dt: f64) -> Result<Self, SnnError> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SnnError::InvalidParams("substep dt must be positive".into()));
        }
        let decay = Receptor::ALL.map(|r| params.tau(r).map_or(0.0, |tau| (-dt / tau).exp()));
        let micro = if params.has_receptor(Receptor::Nmda) { NMDA_MICROSTEPS } else { 1 };
        let enabled = Receptor::ALL.map(|r| params.has_receptor(r));
        Ok(Integrator { params, dt, decay, enabled, micro })
    }

    pub fn params(&self) -> &NeuronParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance one neuron over `[t0, t0 + dt)`. Returns `true` if it spiked.
    #[inline(always)]
    pub fn advance(&self, s: &mut LifState, inc: &Increment, t0: f64) -> bool {
        let p = &self.params;
        if inc.is_zero() && s.is_quiescent(p, t0) {
            return false;
        }
        let [ea, en, eg] = self.enabled;
        s.g_ampa = flush(s.g_ampa * self.decay[0] + if ea { inc.ampa } else { 0.0 });
        s.g_nmda = flush(s.g_nmda * self.decay[1] + if en { inc.nmda } else { 0.0 });
        s.g_gaba = flush(s.g_gaba * self.decay[2] + if eg { inc.gaba } else { 0.0 });

        let end = t0 + self.dt;
        if s.g_nmda == 0.0 && s.refractory_until <= t0 && s.v < p.v_thr {
            // Common case: one segment, no gate, no lockout. Same arithmetic
            // as `integrate`, so results are identical to the general path.
            let (g_tot, i_rev) = self.totals(s, 0.0);
            let v_inf = i_rev / g_tot;
            let tau = p.c_m / g_tot;
            let v_end = v_inf + (s.v - v_inf) * (-(end - t0) / tau).exp();
            if !(v_end >= p.v_thr && v_inf > p.v_thr) {
                s.v = if v_end > p.v_thr { p.v_thr } else { v_end };
                self.snap(s);
                return false;
            }
        }
        let micro = if s.g_nmda > 0.0 { self.micro } else { 1 };
        let h = self.dt / micro as f64;
        let mut spiked = false;
        for k in 0..micro {
            let a = t0 + k as f64 * h;
            let b = if k + 1 == micro { end } else { a + h };
            let mut t = a;
            while t < b {
                if s.refractory_until >= b {
                    s.v = p.e_l;
                    break;
                }
                if s.refractory_until > t {
                    s.v = p.e_l;
                    t = s.refractory_until;
                }
                match self.integrate(s, t, b) {
                    Some(t_cross) => {
                        spiked = true;
                        s.v = p.e_l;
                        s.refractory_until = t_cross + p.t_ref;
                        t = t_cross;
                        // a zero refractory period would otherwise spin
                        if p.t_ref <= 0.0 {
                            break;
                        }
                    }
                    None => break,
                }
            }
        }
        self.snap(s);
        spiked
    }

    #[inline]
    fn snap(&self, s: &mut LifState) {
        let p = &self.params;
        if s.g_ampa == 0.0 && s.g_nmda == 0.0 && s.g_gaba == 0.0 && (s.v - p.e_l).abs() < REST_SNAP {
            s.v = p.e_l;
        }
    }

    /// Exponential-Euler from `t` to `end` with frozen conductances. Updates
    /// `s.v`; on a threshold crossing returns its time and leaves `v` unset.
    #[inline]
    fn integrate(&self, s: &mut LifState, t: f64, end: f64) -> Option<f64> {
        let p = &self.params;
        let span = end - t;
        if span <= 0.0 {
            return None;
        }
        if s.v >= p.v_thr {
            return Some(t);
        }
        let (g_tot, i_rev) = if s.g_nmda > 0.0 {
            // midpoint predictor for the voltage-dependent gate
            let (g0, i0) = self.totals(s, nmda_gate(s.v));
            let v_inf0 = i0 / g0;
            let v_mid = v_inf0 + (s.v - v_inf0) * (-0.5 * span * g0 / p.c_m).exp();
            self.totals(s, nmda_gate(v_mid))
        } else {
            self.totals(s, 0.0)
        };
        let v_inf = i_rev / g_tot;
        let tau = p.c_m / g_tot;
        let v_end = v_inf + (s.v - v_inf) * (-span / tau).exp();
        if v_end >= p.v_thr && v_inf > p.v_thr {
            let dt_cross = tau * ((s.v - v_inf) / (p.v_thr - v_inf)).ln();
            return Some(t + dt_cross.clamp(0.0, span));
        }
        // not f64::min, which would launder a NaN into the threshold
        s.v = if v_end > p.v_thr { p.v_thr } else { v_end };
        None
    }

    #[inline]
    fn totals(&self, s: &LifState, gate: f64) -> (f64, f64) {
        let p = &self.params;
        let g_exc = s.g_ampa + s.g_nmda * gate;
        let e_gaba = p.e_gaba.unwrap_or(0.0);
        let g_tot = p.g_l + g_exc + s.g_gaba;
        let i_rev = p.g_l * p.e_l + g_exc * p.e_ampa + s.g_gaba * e_gaba;
        (g_tot, i_rev)
    }
}

#[inline]
fn flush(g: f64) -> f64 {
    if g < CONDUCTANCE_FLOOR {
        0.0
    } else {
        g
    }
}

/// Advance a population by one substep starting at `t0`.
///
/// `incoming[i]` holds the increments that arrive at neuron `i` at `t0`.
/// Spiking neurons are reported with global id `id_offset + i` at `t0 + dt`.
pub fn step_population(
    states: &mut [LifState],
    params: &NeuronParams,
    incoming: &[Increment],
    t0: f64,
    dt: f64,
    id_offset: u32,
) -> Result<Vec<SpikeEvent>, SnnError> {
    let integrator = Integrator::new(*params, dt)?;
    let mut out = Vec::new();
    step_with(&integrator, states, incoming, t0, id_offset, &mut out)?;
    Ok(out)
}

/// Same as [`step_population`] with a prepared integrator and output buffer.
pub fn step_with(
    integrator: &Integrator,
    states: &mut [LifState],
    incoming: &[Increment],
    t0: f64,
    id_offset: u32,
    out: &mut Vec<SpikeEvent>,
) -> Result<(), SnnError> {
    if incoming.len() != states.len() {
        return Err(SnnError::LengthMismatch { states: states.len(), incoming: incoming.len() });
    }
    let t_emit = t0 + integrator.dt;
    for (i, (s, inc)) in states.iter_mut().zip(incoming).enumerate() {
        if !(inc.ampa >= 0.0 && inc.nmda >= 0.0 && inc.gaba >= 0.0) {
            return Err(SnnError::NegativeIncrement { neuron: id_offset + i as u32 });
        }
        if integrator.advance(s, inc, t0) {
            out.push(SpikeEvent { neuron_id: id_offset + i as u32, time: t_emit });
        }
        if !(s.v + s.g_ampa + s.g_nmda + s.g_gaba).is_finite() {
            return Err(SnnError::NonFinite { neuron: id_offset + i as u32 });
        }
    }
    Ok(())
}

/// The neurons of a population that may not be at rest, in insertion order.
///
/// Quiescent neurons without input are left untouched by
/// [`Integrator::advance`], so stepping only this set gives exactly the
/// result of stepping the whole population.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    list: Vec<u32>,
    member: Vec<bool>,
}

impl ActiveSet {
    pub fn new(n: usize) -> Self {
        ActiveSet { list: Vec::new(), member: vec![false; n] }
    }

    /// Mark neuron `i` as needing an update, e.g. because input arrived.
    #[inline]
    pub fn touch(&mut self, i: usize) {
        if !self.member[i] {
            self.member[i] = true;
            self.list.push(i as u32);
        }
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.list
    }
}

/// [`step_with`] restricted to `active`. Every neuron with a nonzero entry in
/// `incoming` must have been touched. Neurons that end the substep
/// quiescent leave the set. Spikes are reported in set order.
pub fn step_sparse(
    integrator: &Integrator,
    states: &mut [LifState],
    incoming: &[Increment],
    active: &mut ActiveSet,
    t0: f64,
    id_offset: u32,
    out: &mut Vec<SpikeEvent>,
) -> Result<(), SnnError> {
    if incoming.len() != states.len() || active.member.len() != states.len() {
        return Err(SnnError::LengthMismatch { states: states.len(), incoming: incoming.len() });
    }
    let t_emit = t0 + integrator.dt;
    let t_end = t_emit;
    let p = &integrator.params;
    let mut keep = 0;
    for k in 0..active.list.len() {
        let i = active.list[k] as usize;
        let (s, inc) = (&mut states[i], &incoming[i]);
        if !(inc.ampa >= 0.0 && inc.nmda >= 0.0 && inc.gaba >= 0.0) {
            return Err(SnnError::NegativeIncrement { neuron: id_offset + i as u32 });
        }
        if integrator.advance(s, inc, t0) {
            out.push(SpikeEvent { neuron_id: id_offset + i as u32, time: t_emit });
        }
        if !(s.v + s.g_ampa + s.g_nmda + s.g_gaba).is_finite() {
            return Err(SnnError::NonFinite { neuron: id_offset + i as u32 });
        }
        if s.is_quiescent(p, t_end) {
            active.member[i] = false;
        } else {
            active.list[keep] = i as u32;
            keep += 1;
        }
    }
    active.list.truncate(keep);
    Ok(())
}
