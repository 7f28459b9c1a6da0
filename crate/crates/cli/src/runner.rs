//! One run: simulate, stream traces, write the manifest.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use cerebellar::control::{ClosedLoop, ControllerKind, LoopError, Observer, StepRecord, TrialRecord, T_STEP};
use cerebellar::net::NetworkConfig;
use cerebellar::snn::SpikeEvent;

use crate::config::{RunConfig, TraceLevel};
use crate::output::{
    sha256_file, Extrapolation, FileEntry, Manifest, SpikesCsv, StepStats, StepsCsv, TrialsCsv, WeightRange,
    SCHEMA_VERSION, SPIKES_FILE, STEPS_FILE, TRIALS_FILE,
};
use crate::CliError;

/// What a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub trials: Vec<TrialRecord>,
    pub manifest: Manifest,
}

struct Sinks {
    trials: Option<TrialsCsv>,
    steps: Option<StepsCsv>,
    spikes: Option<SpikesCsv>,
    records: Vec<TrialRecord>,
    /// Wall-clock pacing: the loop may not run ahead of simulated time.
    pace: Option<(Instant, Option<u64>)>,
}

impl Observer for Sinks {
    fn wants_steps(&self) -> bool {
        self.steps.is_some() || self.pace.is_some()
    }

    fn wants_spikes(&self) -> bool {
        self.spikes.is_some()
    }

    fn step(&mut self, rec: &StepRecord<'_>) -> Result<(), LoopError> {
        if let Some(s) = self.steps.as_mut() {
            s.write(rec).map_err(|e| LoopError::Output(e.to_string()))?;
        }
        if let Some((origin, first)) = self.pace.as_mut() {
            let first = *first.get_or_insert(rec.step);
            let due = *origin + Duration::from_secs_f64((rec.step - first + 1) as f64 * T_STEP);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
        Ok(())
    }

    fn spikes(&mut self, spikes: &[SpikeEvent]) -> Result<(), LoopError> {
        match self.spikes.as_mut() {
            Some(s) => s.write(spikes).map_err(|e| LoopError::Output(e.to_string())),
            None => Ok(()),
        }
    }

    fn trial(&mut self, rec: &TrialRecord) -> Result<(), LoopError> {
        if let Some(t) = self.trials.as_mut() {
            t.write(rec).map_err(|e| LoopError::Output(e.to_string()))?;
        }
        self.records.push(rec.clone());
        Ok(())
    }
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Median step cost scaled by the ratio of synapse counts to the full-size
/// network. Crude: it ignores that activity, not wiring, drives the cost.
pub fn extrapolate(net: &NetworkConfig, stats: &StepStats) -> Extrapolation {
    let run = net.synapse_counts().total();
    let full = NetworkConfig::full_scale().synapse_counts().total();
    let median_us = stats.median_us * full as f64 / run as f64;
    Extrapolation {
        method: "median step time scaled linearly by total synapse count",
        run_synapses: run,
        full_synapses: full,
        median_us,
        realtime_factor: median_us / (T_STEP * 1e6),
    }
}

fn entry(dir: &Path, name: &str, finished: Option<Result<u64, CliError>>) -> Result<FileEntry, CliError> {
    let (rows, complete) = match finished {
        Some(Ok(rows)) => (rows, true),
        Some(Err(_)) | None => (0, false),
    };
    let sha256 = if complete { Some(sha256_file(&dir.join(name))?) } else { None };
    Ok(FileEntry { name: name.to_string(), rows, complete, sha256 })
}

/// Run the experiment described by `cfg` into `cfg.output.dir`.
///
/// A simulation fault still produces a manifest (status `failed`, unfinished
/// files flagged) before the error is returned.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let exp = &cfg.experiment;
    let n = exp.n_joints();
    let trace = cfg.output.trace;

    let mut sinks = Sinks {
        trials: Some(TrialsCsv::create(&dir.join(TRIALS_FILE), n)?),
        steps: if trace >= TraceLevel::Step { Some(StepsCsv::create(&dir.join(STEPS_FILE), n)?) } else { None },
        spikes: if trace >= TraceLevel::Spikes { Some(SpikesCsv::create(&dir.join(SPIKES_FILE))?) } else { None },
        records: Vec::with_capacity(exp.n_trials),
        pace: cfg.output.realtime_pacing.then(|| (Instant::now(), None)),
    };

    let started = unix_now();
    let mut lp = ClosedLoop::new(exp).map_err(CliError::from_loop)?;
    lp.record_timings();
    let mut failure = None;
    for _ in 0..exp.n_trials {
        if let Err(e) = lp.run_trial(&mut sinks) {
            failure = Some(CliError::from_loop(e));
            break;
        }
    }

    // Only terminate files of a run that finished; a failed run's traces
    // stay unterminated so no reader mistakes them for complete.
    let ok = failure.is_none();
    let trials_done = sinks.trials.take().map(|t| if ok { t.finish() } else { Err(CliError::Io("aborted".into())) });
    let steps_done = sinks.steps.take().map(|s| if ok { s.finish() } else { Err(CliError::Io("aborted".into())) });
    let spikes_done = sinks.spikes.take().map(|s| if ok { s.finish() } else { Err(CliError::Io("aborted".into())) });
    let mut files = vec![entry(&dir, TRIALS_FILE, trials_done)?];
    if trace >= TraceLevel::Step {
        files.push(entry(&dir, STEPS_FILE, steps_done)?);
    }
    if trace >= TraceLevel::Spikes {
        files.push(entry(&dir, SPIKES_FILE, spikes_done)?);
    }
    if failure.is_none() {
        if let Some(f) = files.iter().find(|f| !f.complete) {
            failure = Some(CliError::Io(format!("{} could not be completed", f.name)));
        }
    }

    let stats = StepStats::from_ns(lp.timings());
    let cerebellar = exp.controller == ControllerKind::Cerebellar;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        status: if failure.is_none() { "ok" } else { "failed" },
        error: failure.as_ref().map(|e| e.to_string()),
        seed: exp.seed,
        started_unix_s: started,
        finished_unix_s: unix_now(),
        trials_completed: sinks.records.len(),
        step_compute: stats,
        full_scale: stats.filter(|_| cerebellar).map(|s| extrapolate(&exp.network, &s)),
        pf_pc_weights: lp.network().map(|net| {
            let (min, max) = net.weights().range();
            WeightRange { min, max }
        }),
        files,
        config: serde_json::to_value(cfg).map_err(|e| CliError::Io(format!("config snapshot: {e}")))?,
    };
    manifest.write_atomic(&dir)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunOutcome { dir, trials: sinks.records, manifest }),
    }
}
