//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use cerebellar::net::{kernel_value, EligibilityTraces, PlasticityParams};
use cerebellar::snn::{nmda_gate, Increment, Integrator, LifState, NeuronParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUBSTEP_MS: f64 = 0.5;

// ---- neuron integration ----------------------------------------------------

pub const H_REF: f64 = 0.001;
pub const SPIKE_TOL_MS: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct Drive {
    pub ampa: f64,
    pub nmda: f64,
    pub gaba: f64,
}

fn dvdt(p: &NeuronParams, d: &Drive, v: f64) -> f64 {
    let e_gaba = p.e_gaba.unwrap_or(0.0);
    let i = p.g_l * (p.e_l - v) + (d.ampa + d.nmda * nmda_gate(v)) * (p.e_ampa - v) + d.gaba * (e_gaba - v);
    i / p.c_m
}

/// Classical RK4 at `H_REF`, crossing time by linear interpolation, V held
/// at rest for `t_ref` after each crossing.
pub fn reference_spikes(p: &NeuronParams, d: &Drive, t_end: f64) -> Vec<f64> {
    let mut spikes = Vec::new();
    let mut t = 0.0;
    let mut v = p.e_l;
    while t < t_end {
        let k1 = dvdt(p, d, v);
        let k2 = dvdt(p, d, v + 0.5 * H_REF * k1);
        let k3 = dvdt(p, d, v + 0.5 * H_REF * k2);
        let k4 = dvdt(p, d, v + H_REF * k3);
        let next = v + H_REF / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next >= p.v_thr {
            let tc = t + H_REF * (p.v_thr - v) / (next - v);
            spikes.push(tc);
            t = tc + p.t_ref;
            v = p.e_l;
        } else {
            t += H_REF;
            v = next;
        }
    }
    spikes.retain(|&s| s < t_end);
    spikes
}

/// The library integrator, topping each conductance back up every substep
/// so that it stays at the drive value.
pub fn library_spikes(p: &NeuronParams, d: &Drive, t_end: f64) -> Vec<f64> {
    let integ = Integrator::new(*p, SUBSTEP_MS).unwrap();
    let top_up = |g: f64, tau: Option<f64>| tau.map_or(0.0, |tau| g * (1.0 - (-SUBSTEP_MS / tau).exp()));
    let first = Increment { ampa: d.ampa, nmda: d.nmda, gaba: d.gaba };
    let hold = Increment {
        ampa: top_up(d.ampa, p.tau_ampa),
        nmda: top_up(d.nmda, p.tau_nmda),
        gaba: top_up(d.gaba, p.tau_gaba),
    };
    let mut s = LifState::at_rest(p);
    let mut spikes = Vec::new();
    for k in 0..(t_end / SUBSTEP_MS) as usize {
        let t0 = k as f64 * SUBSTEP_MS;
        if integ.advance(&mut s, if k == 0 { &first } else { &hold }, t0) {
            spikes.push(t0 + SUBSTEP_MS);
        }
    }
    spikes
}

/// Ten random drives scaled to the population's leak, from sub-threshold to
/// fast tonic firing.
pub fn random_drives(p: &NeuronParams, seed: u64) -> Vec<Drive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..10)
        .map(|_| {
            let ampa = p.g_l * rng.random_range(0.2..5.0);
            let nmda = if p.tau_nmda.is_some() { p.g_l * rng.random_range(0.0..2.0) } else { 0.0 };
            let gaba = if p.tau_gaba.is_some() { p.g_l * rng.random_range(0.0..1.0) } else { 0.0 };
            Drive { ampa, nmda, gaba }
        })
        .collect()
}

/// Largest spike-time deviation over all drives, or a description of the
/// first mismatch in spike count.
pub fn worst_spike_error(p: &NeuronParams, seed: u64, t_end: f64) -> Result<(f64, usize), String> {
    let mut worst = 0.0f64;
    let mut spiking = 0;
    for d in random_drives(p, seed) {
        let want = reference_spikes(p, &d, t_end);
        let got = library_spikes(p, &d, t_end);
        if got.len() != want.len() {
            return Err(format!("{d:?}: {} spikes vs {} in the reference", got.len(), want.len()));
        }
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        spiking += usize::from(!want.is_empty());
    }
    Ok((worst, spiking))
}

// ---- eligibility traces ----------------------------------------------------

/// Random spike trains for `n_pf` fibres over `steps` substeps, as the list
/// of fibres spiking at each substep.
pub fn random_trains(n_pf: usize, steps: usize, rate_hz: f64, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rate_hz * SUBSTEP_MS / 1000.0;
    (0..steps).map(|_| (0..n_pf as u32).filter(|_| rng.random::<f64>() < p).collect()).collect()
}

/// Largest relative deviation between the incremental traces and the
/// kernel summed directly over each fibre's spike history, checked at every
/// substep where the direct sum is non-negligible.
pub fn trace_vs_convolution(params: &PlasticityParams, trains: &[Vec<u32>], n_pf: usize) -> f64 {
    let mut traces = EligibilityTraces::new(n_pf, params, SUBSTEP_MS).unwrap();
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); n_pf];
    let mut worst = 0.0f64;
    for (k, spikes) in trains.iter().enumerate() {
        let now = (k + 1) as f64 * SUBSTEP_MS;
        traces.advance(spikes);
        for &pf in spikes {
            history[pf as usize].push(now);
        }
        for (pf, h) in history.iter().enumerate() {
            let direct: f64 = h.iter().map(|&t| kernel_value(t - now, params)).sum();
            let inc = traces.value(pf);
            if direct > 1e-6 {
                worst = worst.max((inc - direct).abs() / direct);
            } else {
                worst = worst.max((inc - direct).abs() / 1e-6);
            }
        }
    }
    worst
}

// ---- loop latency ------------------------------------------------------------

use std::cell::RefCell;
use std::rc::Rc;

use cerebellar::codecs::JointSample;
use cerebellar::control::{ClosedLoop, Controller, ExperimentConfig, LoopError, Observer, StepRecord};
use cerebellar::net::{HalfCounts, NetError};
use cerebellar::snn::SpikeEvent;

/// Emits one torque impulse on joint 0 at a given step and logs the sensed
/// angle it is shown at every step.
struct Impulse {
    at: u64,
    step: u64,
    sensed: Rc<RefCell<Vec<f64>>>,
}

impl Controller for Impulse {
    fn command(
        &mut self,
        signals: &[JointSample],
        _plastic: bool,
        _spikes: Option<&mut Vec<SpikeEvent>>,
        torque: &mut [f64],
        counts: &mut [HalfCounts],
    ) -> Result<(), NetError> {
        self.sensed.borrow_mut().push(signals[0].q_a);
        torque.iter_mut().for_each(|t| *t = 0.0);
        if self.step == self.at {
            torque[0] = 1.0;
        }
        counts.iter_mut().for_each(|c| *c = HalfCounts::default());
        self.step += 1;
        Ok(())
    }
}

struct TrueAngle(Vec<f64>);

impl Observer for TrueAngle {
    fn wants_steps(&self) -> bool {
        true
    }
    fn step(&mut self, rec: &StepRecord<'_>) -> Result<(), LoopError> {
        assert_eq!(rec.step as usize, self.0.len());
        self.0.push(rec.q_a[0]);
        Ok(())
    }
}

/// Emit an impulse at step `at` from rest and return the first step whose
/// starting plant state has moved and the first step at which the
/// controller sees the movement.
pub fn impulse_latency(cfg: &ExperimentConfig, at: u64) -> (usize, usize) {
    let sensed = Rc::new(RefCell::new(Vec::new()));
    let ctl = Impulse { at, step: 0, sensed: Rc::clone(&sensed) };
    let mut lp = ClosedLoop::with_controller(cfg, Box::new(ctl)).unwrap();
    let mut obs = TrueAngle(Vec::new());
    lp.run_trial(&mut obs).unwrap();
    let moved = |v: &[f64]| v.iter().position(|&q| q != v[0]).expect("impulse never arrived");
    let sensed = sensed.borrow();
    (moved(&obs.0), moved(&sensed))
}

// ---- codecs --------------------------------------------------------------------

use std::collections::HashSet;

use cerebellar::codecs::{encode_cf, encode_mf, CfRates, DcnDecoder, JointRange};
use cerebellar::net::{build_network, Channel, MicroComplexLayout, NetworkConfig};
use cerebellar::rng::{stream, Stream};

/// Encode random (often out-of-range or non-finite) samples and check that
/// exactly one fibre per channel of every joint fires.
pub fn check_mf_activation(n_joints: usize, bins: usize, samples: usize, seed: u64) -> Result<(), String> {
    let cfg = NetworkConfig { n_joints, bins, cells_per_complex: 4, ..NetworkConfig::full_scale() };
    let layout = MicroComplexLayout::new(&cfg);
    let ranges = vec![JointRange { q: [-1.0, 1.0], qd: [-2.0, 2.0] }; n_joints];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specials = [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 1e300, -0.0];
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < 0.05 {
            specials[rng.random_range(0..specials.len())]
        } else {
            rng.random_range(-10.0..10.0)
        }
    };
    let mut out = Vec::new();
    for _ in 0..samples {
        let signals: Vec<JointSample> = (0..n_joints)
            .map(|_| JointSample { q_d: draw(&mut rng), qd_d: draw(&mut rng), q_a: draw(&mut rng), qd_a: draw(&mut rng) })
            .collect();
        encode_mf(&signals, &ranges, &layout, &mut out);
        if out.len() != 4 * n_joints {
            return Err(format!("{} fibres active for {n_joints} joints", out.len()));
        }
        if out.iter().collect::<HashSet<_>>().len() != out.len() {
            return Err("a fibre was reported twice".into());
        }
        for blk in &layout.joints {
            for sub in &blk.mf {
                let hits = out.iter().filter(|i| sub.contains(i)).count();
                if hits != 1 {
                    return Err(format!("{hits} fibres active in one channel"));
                }
            }
        }
    }
    Ok(())
}

/// Every 4-tuple of bins of every joint addresses its own granule cell, and
/// the built wiring connects it to exactly those four fibres.
pub fn check_gc_bijection(n_joints: usize, bins: usize) -> Result<(), String> {
    let cfg = NetworkConfig { n_joints, bins, cells_per_complex: 4, ..NetworkConfig::full_scale() };
    let layout = MicroComplexLayout::new(&cfg);
    let net = build_network(&cfg, &PlasticityParams::default()).map_err(|e| e.to_string())?;
    let mut parents = vec![Vec::new(); cfg.n_gc()];
    for mf in 0..cfg.n_mf() {
        for syn in net.mossy_granule().fan_out(mf) {
            parents[syn.post as usize].push(mf);
        }
    }
    let mut seen = HashSet::new();
    for j in 0..n_joints {
        for code in 0..bins.pow(4) {
            let tuple = [code / bins.pow(3), code / bins.pow(2) % bins, code / bins % bins, code % bins];
            let gc = layout.gc_index(j, tuple);
            if !layout.joints[j].gc.contains(&gc) || !seen.insert(gc) {
                return Err(format!("joint {j} bins {tuple:?} -> GC {gc} is outside its block or taken"));
            }
            if layout.gc_bins(gc) != (j, tuple) {
                return Err(format!("GC {gc} does not decode to {tuple:?}"));
            }
            let mut want: Vec<usize> =
                Channel::ALL.iter().zip(tuple).map(|(&ch, bin)| layout.mf_index(j, ch, bin)).collect();
            want.sort_unstable();
            let mut got = parents[gc].clone();
            got.sort_unstable();
            if got != want {
                return Err(format!("GC {gc} is wired to {got:?}, expected {want:?}"));
            }
        }
    }
    if seen.len() != cfg.n_gc() {
        return Err(format!("{} of {} granule cells addressed", seen.len(), cfg.n_gc()));
    }
    Ok(())
}

/// Empirical climbing-fibre rates per cell (agonist half, antagonist half)
/// for a constant error over `steps` control steps.
pub fn cf_rates(eps: f64, steps: usize, seed: u64) -> (f64, f64) {
    let cfg = NetworkConfig { n_joints: 1, bins: 3, cells_per_complex: 40, ..NetworkConfig::full_scale() };
    let layout = MicroComplexLayout::new(&cfg);
    let rates = CfRates::default();
    let mut rng = stream(seed, Stream::ClimbingFibres);
    let dt = 0.002;
    let mut out = Vec::new();
    let (mut ag, mut an) = (0usize, 0usize);
    for _ in 0..steps {
        encode_cf(&[eps], &rates, &layout, &mut rng, dt, &mut out);
        ag += out.iter().filter(|&&c| layout.joints[0].agonist.contains(&c)).count();
        an += out.iter().filter(|&&c| layout.joints[0].antagonist.contains(&c)).count();
    }
    let per_cell = steps as f64 * dt * layout.joints[0].agonist.len() as f64;
    (ag as f64 / per_cell, an as f64 / per_cell)
}

/// Rates at zero, half and full error against `r(ϵ)`, worst relative deviation.
pub fn check_cf_rates(steps: usize) -> Result<f64, String> {
    let rates = CfRates::default();
    let mut worst = 0.0f64;
    for (k, eps) in [0.0, rates.eps_max / 2.0, rates.eps_max].into_iter().enumerate() {
        let (ag, an) = cf_rates(eps, steps, k as u64);
        let want = rates.rate(eps);
        let dev = (ag / want - 1.0).abs().max((an / rates.r_min - 1.0).abs());
        if dev > 0.10 {
            return Err(format!("eps {eps}: agonist {ag:.3} Hz, antagonist {an:.3} Hz, expected {want:.3}/{:.3}", rates.r_min));
        }
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// The worked decoding example: 50 net agonist spikes, gain 0.75, 15 taps.
pub fn decoder_hand_example() -> f64 {
    let mut d = DcnDecoder::new(vec![0.75], 15);
    let mut tau = [0.0];
    d.decode(&[HalfCounts { agonist: 50, antagonist: 0 }], &mut tau);
    tau[0]
}
