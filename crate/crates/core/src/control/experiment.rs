//! Experiment configuration and the closed sensorimotor loop.
//!
//! Per 2 ms control step:
//!
//! 1. take the delayed plant state off the afferent line;
//! 2. pair it with the current desired state, encode MFs and the error;
//! 3. sample CF spikes from the error;
//! 4. advance the network (four neural substeps, plasticity on or off);
//! 5. decode nuclear counts into torque;
//! 6. put the torque on the efferent line;
//! 7. the torque leaving the efferent line passes the supervisor and drives
//!    the plant for the plant substeps of this step;
//! 8. put the new plant state on the afferent line.
//!
//! A torque emitted at step `i` therefore acts during step `i + d_e` and its
//! first consequence is sensed at step `i + d_e + d_a`.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::controller::{CerebellarController, Controller, NoController, PdController, PdGains};
use super::delay::DelayLine;
use super::trajectory::{Trajectory, TrajectoryKind, TrajectorySpec};
use super::LoopError;
use crate::codecs::{CfRates, DcnDecoder, JointRange, JointSample, DEFAULT_TAPS};
use crate::net::{build_network, CerebellarNetwork, HalfCounts, NetworkConfig, PlasticityParams, CONTROL_STEP_MS};
use crate::plant::{
    end_effector, supervise, Band, PerturbationScript, Plant, PlantConfig, PlantKind, PlantState, ScriptState,
    SupervisorParams,
};
use crate::rng::{stream, Stream};
use crate::snn::SpikeEvent;

/// Control step, s.
pub const T_STEP: f64 = CONTROL_STEP_MS / 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Circle,
    Eight,
    Reach,
    /// The circle with the perturbation script active.
    Interact,
}

impl Task {
    pub fn label(self) -> &'static str {
        match self {
            Task::Circle => "circle",
            Task::Eight => "eight",
            Task::Reach => "reach",
            Task::Interact => "interact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Cerebellar,
    Pd,
    /// Zero torque: the uncontrolled plant.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    /// Velocity weight of the error, s.
    pub k_v: f64,
    pub cf: CfRates,
    /// Explicit encoder ranges; overrides the two rules below.
    pub ranges: Option<Vec<JointRange>>,
    /// Position range = desired envelope ± margin (rad). Without it the
    /// plant's working range is used.
    pub position_margin: Option<f64>,
    /// Velocity range = ±scale · largest desired speed.
    pub velocity_scale: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig { k_v: 0.1, cf: CfRates::default(), ranges: None, position_margin: None, velocity_scale: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    /// N·m per net spike, one per joint.
    pub gains: Vec<f64>,
    pub taps: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { gains: vec![0.75, 1.0], taps: DEFAULT_TAPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub delay_efferent_ms: f64,
    pub delay_afferent_ms: f64,
    /// Control steps per trial.
    pub steps_per_trial: usize,
    /// Actuator saturation, N·m.
    pub max_torque: Option<f64>,
    /// Standard deviations of sensed angle (rad) and velocity (rad/s).
    pub sensor_noise: [f64; 2],
    /// Put the arm back at the trajectory start before every trial.
    pub reset_every_trial: bool,
    /// Put it back when any joint has drifted further than this (rad) from
    /// the trajectory start, during the first `reset_within_trials` trials.
    pub reset_drift: Option<f64>,
    pub reset_within_trials: usize,
    /// Switch plasticity off from this trial on.
    pub freeze_from_trial: Option<usize>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            delay_efferent_ms: 50.0,
            delay_afferent_ms: 50.0,
            steps_per_trial: 1000,
            max_torque: None,
            sensor_noise: [0.0, 0.0],
            reset_every_trial: false,
            reset_drift: None,
            reset_within_trials: 0,
            freeze_from_trial: None,
        }
    }
}

impl LoopConfig {
    fn steps(ms: f64, what: &str) -> Result<usize, LoopError> {
        let n = ms / CONTROL_STEP_MS;
        if !(ms >= 0.0) || (n - n.round()).abs() > 1e-9 {
            return Err(LoopError::Config(format!("loop.{what} must be a non-negative multiple of {CONTROL_STEP_MS} ms")));
        }
        Ok(n.round() as usize)
    }

    pub fn efferent_steps(&self) -> Result<usize, LoopError> {
        Self::steps(self.delay_efferent_ms, "delay_efferent_ms")
    }

    pub fn afferent_steps(&self) -> Result<usize, LoopError> {
        Self::steps(self.delay_afferent_ms, "delay_afferent_ms")
    }
}

/// Everything that determines a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n_trials: usize,
    pub seed: u64,
    pub controller: ControllerKind,
    pub network: NetworkConfig,
    pub plasticity: PlasticityParams,
    pub codec: CodecConfig,
    pub decoder: DecoderConfig,
    pub plant: PlantConfig,
    pub trajectory: TrajectorySpec,
    pub supervisor: SupervisorParams,
    pub perturbations: PerturbationScript,
    #[serde(rename = "loop")]
    pub loop_: LoopConfig,
    pub baseline: PdGains,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Circle,
            n_trials: 500,
            seed: 1,
            controller: ControllerKind::Cerebellar,
            network: desk_network(),
            // learning rates scaled down for the small network, with LTD four
            // times LTP so the balance climbing-fibre rate sits near 3 Hz
            plasticity: PlasticityParams { alpha_ltp: 1e-4, beta_ltd: -4e-4, ..PlasticityParams::default() },
            codec: CodecConfig { k_v: 0.6, position_margin: Some(0.1), ..CodecConfig::default() },
            decoder: DecoderConfig { gains: vec![0.3, 0.3], ..DecoderConfig::default() },
            plant: PlantConfig::default(),
            trajectory: TrajectorySpec::default(),
            supervisor: SupervisorParams::default(),
            perturbations: PerturbationScript::default(),
            loop_: LoopConfig::default(),
            baseline: PdGains { kp: vec![2.0, 2.0], kd: vec![0.3, 0.3] },
        }
    }
}

fn desk_network() -> NetworkConfig {
    let mut net = NetworkConfig { n_joints: 2, bins: 10, cells_per_complex: 40, ..NetworkConfig::full_scale() };
    net.weights.pf_pc = 0.07;
    net
}

impl ExperimentConfig {
    pub fn n_joints(&self) -> usize {
        self.plant.n_joints()
    }

    /// The trajectory the task follows. Joint sinusoids are kept for any task.
    pub fn trajectory_spec(&self) -> TrajectorySpec {
        let mut spec = self.trajectory.clone();
        if spec.kind != TrajectoryKind::JointSines {
            spec.kind = match self.task {
                Task::Circle | Task::Interact => TrajectoryKind::Circle,
                Task::Eight => TrajectoryKind::Eight,
                Task::Reach => TrajectoryKind::Reach,
            };
        }
        spec
    }

    pub fn build_trajectory(&self) -> Result<Trajectory, LoopError> {
        Trajectory::new(&self.trajectory_spec(), &self.plant.links, self.n_joints())
            .map_err(|e| LoopError::Config(format!("trajectory: {e}")))
    }

    /// Cross-field validation; nothing is simulated.
    pub fn validate(&self) -> Result<(), LoopError> {
        let cfgerr = |m: String| Err(LoopError::Config(m));
        let n = self.n_joints();
        if self.n_trials == 0 {
            return cfgerr("n_trials must be at least 1".into());
        }
        if self.loop_.steps_per_trial == 0 {
            return cfgerr("loop.steps_per_trial must be at least 1".into());
        }
        self.plant.validate().map_err(|e| LoopError::Config(format!("plant: {e}")))?;
        let ratio = T_STEP / self.plant.substep_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return cfgerr("plant.substep_s must divide the 2 ms control step".into());
        }
        self.loop_.efferent_steps()?;
        self.loop_.afferent_steps()?;
        if self.loop_.sensor_noise.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return cfgerr("loop.sensor_noise must be finite and non-negative".into());
        }
        if let Some(m) = self.loop_.max_torque {
            if !(m > 0.0) {
                return cfgerr("loop.max_torque must be positive".into());
            }
        }
        self.build_trajectory()?;
        let anchor_len = if self.plant.model == PlantKind::TwoLink { 2 } else { n };
        self.perturbations.validate(n, anchor_len).map_err(|e| LoopError::Config(e.to_string()))?;
        let s = &self.supervisor;
        if !(s.k_sup >= 0.0 && s.d_sup >= 0.0) {
            return cfgerr("supervisor gains must be non-negative".into());
        }
        match self.controller {
            ControllerKind::Cerebellar => {
                if self.network.n_joints != n {
                    return cfgerr(format!("network.n_joints = {} but the plant has {n} joints", self.network.n_joints));
                }
                self.network.validate().map_err(|e| LoopError::Config(format!("network: {e}")))?;
                self.plasticity
                    .validate(self.network.weights.pf_pc)
                    .map_err(|e| LoopError::Config(format!("plasticity: {e}")))?;
                if self.decoder.gains.len() != n {
                    return cfgerr(format!("decoder.gains has {} entries for {n} joints", self.decoder.gains.len()));
                }
                if !self.decoder.gains.iter().all(|g| g.is_finite()) {
                    return cfgerr("decoder.gains must be finite".into());
                }
                if self.decoder.taps == 0 {
                    return cfgerr("decoder.taps must be at least 1".into());
                }
                let r = &self.codec.cf;
                if !(r.r_min >= 0.0 && r.r_max >= r.r_min && r.r_max * T_STEP <= 1.0) {
                    return cfgerr("codec.cf needs 0 <= r_min <= r_max <= 500 Hz".into());
                }
                if !(r.eps_max > 0.0) {
                    return cfgerr("codec.cf.eps_max must be positive".into());
                }
                if !self.codec.k_v.is_finite() {
                    return cfgerr("codec.k_v must be finite".into());
                }
                if let Some(ranges) = &self.codec.ranges {
                    if ranges.len() != n {
                        return cfgerr(format!("codec.ranges has {} entries for {n} joints", ranges.len()));
                    }
                    if ranges.iter().any(|r| !(r.q[0] < r.q[1] && r.qd[0] < r.qd[1])) {
                        return cfgerr("codec.ranges: every min must be below its max".into());
                    }
                }
                if self.codec.position_margin.is_some_and(|m| !(m >= 0.0)) {
                    return cfgerr("codec.position_margin must be non-negative".into());
                }
                if !(self.codec.velocity_scale > 0.0) {
                    return cfgerr("codec.velocity_scale must be positive".into());
                }
            }
            ControllerKind::Pd => {
                let b = &self.baseline;
                if b.kp.len() != n || b.kd.len() != n {
                    return cfgerr(format!("baseline.kp and baseline.kd need {n} entries"));
                }
                if !b.kp.iter().chain(&b.kd).all(|g| *g >= 0.0 && g.is_finite()) {
                    return cfgerr("baseline gains must be finite and non-negative".into());
                }
            }
            ControllerKind::None => {}
        }
        Ok(())
    }

    /// Encoder ranges after applying the defaulting rules.
    pub fn encoder_ranges(&self, traj: &Trajectory) -> Vec<JointRange> {
        if let Some(r) = &self.codec.ranges {
            return r.clone();
        }
        traj.envelope()
            .iter()
            .zip(&self.plant.joints)
            .map(|(&([lo, hi], vmax), p)| {
                let q = match self.codec.position_margin {
                    Some(m) => [lo - m, hi + m],
                    None => [p.q_lo, p.q_hi],
                };
                let v = if vmax > 0.0 { vmax * self.codec.velocity_scale } else { 1.0 };
                JointRange { q, qd: [-v, v] }
            })
            .collect()
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    /// Per-joint mean absolute position error, rad.
    pub mae: Vec<f64>,
    /// Mean over joints, rad.
    pub mean_mae: f64,
    pub task: String,
    /// Reach target, when the task has several.
    pub target: Option<usize>,
    pub payload: bool,
    pub band: bool,
    pub push: bool,
    pub plastic: bool,
}

/// One control step as seen by an observer.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub trial: usize,
    /// Control step since the start of the run.
    pub step: u64,
    /// Simulation time at the start of the step, s.
    pub t: f64,
    pub q_d: &'a [f64],
    /// True (undelayed) link angles at the start of the step.
    pub q_a: &'a [f64],
    /// Torque emitted by the controller this step, N·m.
    pub tau: &'a [f64],
    pub counts: &'a [HalfCounts],
}

/// Receives results as the loop produces them.
pub trait Observer {
    fn wants_steps(&self) -> bool {
        false
    }
    fn wants_spikes(&self) -> bool {
        false
    }
    fn step(&mut self, _rec: &StepRecord<'_>) -> Result<(), LoopError> {
        Ok(())
    }
    fn spikes(&mut self, _spikes: &[SpikeEvent]) -> Result<(), LoopError> {
        Ok(())
    }
    fn trial(&mut self, _rec: &TrialRecord) -> Result<(), LoopError> {
        Ok(())
    }
}

/// Observer that ignores everything.
pub struct Silent;
impl Observer for Silent {}

/// Mean absolute difference per joint and its mean over joints.
pub fn mae(desired: &[Vec<f64>], actual: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let per: Vec<f64> = desired
        .iter()
        .zip(actual)
        .map(|(d, a)| {
            assert_eq!(d.len(), a.len(), "MAE over series of different length");
            d.iter().zip(a).map(|(d, a)| (d - a).abs()).sum::<f64>() / d.len() as f64
        })
        .collect();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    (per, mean)
}

enum Ctl {
    Cerebellar(Box<CerebellarController>),
    Pd(PdController),
    Off(NoController),
    Custom(Box<dyn Controller>),
}

impl Ctl {
    fn as_dyn(&mut self) -> &mut dyn Controller {
        match self {
            Ctl::Cerebellar(c) => c.as_mut(),
            Ctl::Pd(c) => c,
            Ctl::Off(c) => c,
            Ctl::Custom(c) => c.as_mut(),
        }
    }
}

/// A running experiment: plant, controller, delay lines and trial counter.
pub struct ClosedLoop {
    cfg: ExperimentConfig,
    traj: Trajectory,
    plant: Plant,
    ctl: Ctl,
    efferent: DelayLine<Vec<f64>>,
    afferent: DelayLine<PlantState>,
    noise_rng: ChaCha8Rng,
    target_rng: ChaCha8Rng,
    trial: usize,
    step: u64,
    /// Anchor latched when a band without a fixed anchor attaches.
    band_anchor: Option<(usize, Vec<f64>)>,
    plant_substeps: usize,
    timings: Option<Vec<u32>>,
    spike_buf: Vec<SpikeEvent>,
}

impl ClosedLoop {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, LoopError> {
        cfg.validate()?;
        let traj = cfg.build_trajectory()?;
        let ctl = match cfg.controller {
            ControllerKind::Cerebellar => {
                let net = build_network(&cfg.network, &cfg.plasticity)?;
                Ctl::Cerebellar(Box::new(CerebellarController::new(
                    net,
                    DcnDecoder::new(cfg.decoder.gains.clone(), cfg.decoder.taps),
                    cfg.codec.cf,
                    cfg.codec.k_v,
                    cfg.encoder_ranges(&traj),
                    stream(cfg.seed, Stream::ClimbingFibres),
                )))
            }
            ControllerKind::Pd => Ctl::Pd(PdController { gains: cfg.baseline.clone() }),
            ControllerKind::None => Ctl::Off(NoController),
        };
        Self::assemble(cfg, traj, ctl)
    }

    /// The same loop driven by any controller; `cfg.controller` and the
    /// network sections are ignored. Plasticity is reported as on unless
    /// frozen by `loop.freeze_from_trial`.
    pub fn with_controller(cfg: &ExperimentConfig, controller: Box<dyn Controller>) -> Result<Self, LoopError> {
        let cfg = ExperimentConfig { controller: ControllerKind::None, ..cfg.clone() };
        cfg.validate()?;
        let traj = cfg.build_trajectory()?;
        Self::assemble(&cfg, traj, Ctl::Custom(controller))
    }

    fn assemble(cfg: &ExperimentConfig, traj: Trajectory, ctl: Ctl) -> Result<Self, LoopError> {
        let n = cfg.n_joints();
        let mut start = vec![(0.0, 0.0); n];
        traj.sample(0.0, 0, &mut start);
        let q0: Vec<f64> = start.iter().map(|s| s.0).collect();
        let init = PlantState::at_rest(&q0);
        let plant = Plant::new(cfg.plant.clone(), init.clone())?;
        Ok(ClosedLoop {
            efferent: DelayLine::new(cfg.loop_.efferent_steps()?, vec![0.0; n]),
            afferent: DelayLine::new(cfg.loop_.afferent_steps()?, init),
            noise_rng: stream(cfg.seed, Stream::SensorNoise),
            target_rng: stream(cfg.seed, Stream::ReachTargets),
            plant_substeps: (T_STEP / cfg.plant.substep_s).round() as usize,
            cfg: cfg.clone(),
            traj,
            plant,
            ctl,
            trial: 0,
            step: 0,
            band_anchor: None,
            timings: None,
            spike_buf: Vec::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn cerebellum(&self) -> Option<&CerebellarController> {
        match &self.ctl {
            Ctl::Cerebellar(c) => Some(c),
            _ => None,
        }
    }

    pub fn cerebellum_mut(&mut self) -> Option<&mut CerebellarController> {
        match &mut self.ctl {
            Ctl::Cerebellar(c) => Some(c),
            _ => None,
        }
    }

    pub fn network(&self) -> Option<&CerebellarNetwork> {
        self.cerebellum().map(|c| &c.net)
    }

    /// Trials completed so far.
    pub fn trials_done(&self) -> usize {
        self.trial
    }

    /// Start recording per-step compute time.
    pub fn record_timings(&mut self) {
        self.timings.get_or_insert_with(Vec::new);
    }

    /// Compute time of every control step so far, ns.
    pub fn timings(&self) -> &[u32] {
        self.timings.as_deref().unwrap_or(&[])
    }

    /// Turn a running circle experiment into an interaction experiment with
    /// `script`, keeping the plant, network and weights as they are. Trial
    /// numbers in the script count from the start of the run.
    pub fn start_interaction(&mut self, script: PerturbationScript) -> Result<(), LoopError> {
        if !matches!(self.cfg.task, Task::Circle | Task::Interact) {
            return Err(LoopError::Config(format!("cannot perturb a running {} task", self.cfg.task.label())));
        }
        let cfg = ExperimentConfig { task: Task::Interact, perturbations: script, ..self.cfg.clone() };
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    fn script_state(&self) -> ScriptState {
        if self.cfg.task == Task::Interact {
            self.cfg.perturbations.at_trial(self.trial)
        } else {
            ScriptState::default()
        }
    }

    fn apply_overlay(&mut self, st: &ScriptState) {
        self.plant.overlay.payload = st.payload;
        self.plant.overlay.band = match &st.band {
            None => {
                self.band_anchor = None;
                None
            }
            Some((stiffness, anchor, attached)) => {
                let anchor = match anchor {
                    Some(a) => a.clone(),
                    None => {
                        if self.band_anchor.as_ref().is_none_or(|(t, _)| t != attached) {
                            let s = self.plant.state();
                            let here = match self.cfg.plant.model {
                                PlantKind::TwoLink => end_effector(&self.cfg.plant.links, [s.joints[0].q, s.joints[1].q]).to_vec(),
                                PlantKind::Decoupled => s.joints.iter().map(|j| j.q).collect(),
                            };
                            self.band_anchor = Some((*attached, here));
                        }
                        self.band_anchor.as_ref().map(|(_, a)| a.clone()).unwrap_or_default()
                    }
                };
                Some(Band { stiffness: *stiffness, anchor })
            }
        };
    }

    fn sense(&mut self) -> PlantState {
        let mut s = self.plant.state().clone();
        let [sq, sv] = self.cfg.loop_.sensor_noise;
        if sq > 0.0 || sv > 0.0 {
            let nq = Normal::new(0.0, sq).expect("validated");
            let nv = Normal::new(0.0, sv).expect("validated");
            for j in &mut s.joints {
                j.q += nq.sample(&mut self.noise_rng);
                j.q_dot += nv.sample(&mut self.noise_rng);
            }
        }
        s
    }

    /// Run one trial and report it.
    pub fn run_trial(&mut self, obs: &mut dyn Observer) -> Result<TrialRecord, LoopError> {
        let n = self.cfg.n_joints();
        let k_steps = self.cfg.loop_.steps_per_trial;
        let trial = self.trial;
        let script = self.script_state();
        self.apply_overlay(&script);
        let target = if self.traj.variants() > 1 { self.target_rng.random_range(0..self.traj.variants()) } else { 0 };
        let desired = self.traj.table(target, k_steps, T_STEP);

        let lc = &self.cfg.loop_;
        let drift = self.plant.state().joints.iter().zip(&desired).map(|(s, d)| (s.q - d[0].0).abs()).fold(0.0, f64::max);
        if lc.reset_every_trial || (trial < lc.reset_within_trials && lc.reset_drift.is_some_and(|b| drift > b)) {
            let q0: Vec<f64> = desired.iter().map(|d| d[0].0).collect();
            self.plant.set_state(PlantState::at_rest(&q0));
        }

        let plastic = matches!(self.ctl, Ctl::Cerebellar(_) | Ctl::Custom(_)) && lc.freeze_from_trial.is_none_or(|f| trial < f);
        let max_torque = lc.max_torque;
        let want_steps = obs.wants_steps();
        let want_spikes = obs.wants_spikes();
        let dt_plant = self.cfg.plant.substep_s;

        let mut signals = vec![JointSample::default(); n];
        let mut tau = vec![0.0; n];
        let mut counts = vec![HalfCounts::default(); n];
        let mut tau_ext = vec![0.0; n];
        let mut tau_out = vec![0.0; n];
        let mut q_d = vec![0.0; n];
        let mut q_a = vec![0.0; n];
        let mut abs_err = vec![0.0; n];

        for i in 0..k_steps {
            let clock = Instant::now();
            // a zero-depth line is empty on the very first step
            let sensed = match self.afferent.pop() {
                Some(s) => s,
                None => self.sense(),
            };
            for j in 0..n {
                let (qd, vd) = desired[j][i];
                let s = &sensed.joints[j];
                signals[j] = JointSample { q_d: qd, qd_d: vd, q_a: s.q, qd_a: s.q_dot };
                q_d[j] = qd;
                q_a[j] = self.plant.state().joints[j].q;
                abs_err[j] += (qd - q_a[j]).abs();
            }
            self.spike_buf.clear();
            let rec = if want_spikes { Some(&mut self.spike_buf) } else { None };
            self.ctl
                .as_dyn()
                .command(&signals, plastic, rec, &mut tau, &mut counts)
                .map_err(|e| LoopError::Network { step: self.step, source: e })?;
            if let Some(m) = max_torque {
                tau.iter_mut().for_each(|t| *t = t.clamp(-m, m));
            }
            let applied = self.efferent.exchange(tau.clone());
            for sub in 0..self.plant_substeps {
                let t_in_trial = i as f64 * T_STEP + sub as f64 * dt_plant;
                script.push_torque(t_in_trial, &mut tau_ext);
                tau_out.copy_from_slice(&applied);
                supervise(self.plant.state(), &mut tau_out, &self.cfg.plant.joints, &self.cfg.supervisor);
                self.plant
                    .step(&tau_out, &tau_ext, dt_plant)
                    .map_err(|e| LoopError::Plant { step: self.step, source: e })?;
            }
            let s = self.sense();
            self.afferent.push(s);
            if let Some(t) = self.timings.as_mut() {
                t.push(clock.elapsed().as_nanos().min(u32::MAX as u128) as u32);
            }

            if want_spikes {
                obs.spikes(&self.spike_buf)?;
            }
            if want_steps {
                obs.step(&StepRecord {
                    trial,
                    step: self.step,
                    t: self.step as f64 * T_STEP,
                    q_d: &q_d,
                    q_a: &q_a,
                    tau: &tau,
                    counts: &counts,
                })?;
            }
            self.step += 1;
        }

        let per: Vec<f64> = abs_err.iter().map(|e| e / k_steps as f64).collect();
        let rec = TrialRecord {
            trial,
            mean_mae: per.iter().sum::<f64>() / n as f64,
            mae: per,
            task: self.cfg.task.label().to_string(),
            target: (self.traj.variants() > 1).then_some(target),
            payload: script.payload > 0.0,
            band: script.band.is_some(),
            push: !script.pushes.is_empty(),
            plastic,
        };
        obs.trial(&rec)?;
        self.trial += 1;
        Ok(rec)
    }

    /// Run `n` more trials.
    pub fn run_trials(&mut self, n: usize, obs: &mut dyn Observer) -> Result<Vec<TrialRecord>, LoopError> {
        (0..n).map(|_| self.run_trial(obs)).collect()
    }
}

/// Run `cfg.n_trials` trials of the configured task from a fresh state.
pub fn run_experiment(cfg: &ExperimentConfig, obs: &mut dyn Observer) -> Result<Vec<TrialRecord>, LoopError> {
    let mut lp = ClosedLoop::new(cfg)?;
    lp.run_trials(cfg.n_trials, obs)
}

/// The same loop with a PD law in place of the cerebellum.
pub fn run_pd_baseline(cfg: &ExperimentConfig, n_trials: usize, gains: &PdGains) -> Result<Vec<TrialRecord>, LoopError> {
    let cfg = ExperimentConfig { controller: ControllerKind::Pd, baseline: gains.clone(), n_trials, ..cfg.clone() };
    run_experiment(&cfg, &mut Silent)
}
