//! On-disk run artefacts.
//!
//! | file            | columns                                                                 |
//! |-----------------|-------------------------------------------------------------------------|
//! | `trials.csv`    | `trial, mae_0..mae_{n-1}, mean_mae, task, target, payload, band, push, plastic` |
//! | `steps.csv.gz`  | `trial, step, t, q_d_j.., q_a_j.., tau_j.., dcn_ag_j.., dcn_an_j..`      |
//! | `spikes.csv.gz` | `neuron_id, t`                                                          |
//! | `manifest.json` | see [`Manifest`]                                                        |
//!
//! Times are in seconds. Flags are `0`/`1`; an absent reach target is an
//! empty field. Every CSV ends with a `#END,<rows>` line; a file without one
//! was cut short. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cerebellar::control::{StepRecord, TrialRecord};
use cerebellar::snn::SpikeEvent;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TRIALS_FILE: &str = "trials.csv";
pub const STEPS_FILE: &str = "steps.csv.gz";
pub const SPIKES_FILE: &str = "spikes.csv.gz";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// A CSV file with a row counter and a terminator line.
pub struct CsvSink<W: Write> {
    path: PathBuf,
    out: W,
    rows: u64,
}

impl<W: Write> CsvSink<W> {
    fn line(&mut self, text: &str) -> Result<(), CliError> {
        self.out.write_all(text.as_bytes()).map_err(io_err(&self.path))
    }

    fn row(&mut self, text: &str) -> Result<(), CliError> {
        self.rows += 1;
        self.line(text)
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    fn terminate(&mut self) -> Result<(), CliError> {
        let end = format!("#END,{}\n", self.rows);
        self.line(&end)?;
        self.out.flush().map_err(io_err(&self.path))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub struct TrialsCsv(CsvSink<BufWriter<File>>);

impl TrialsCsv {
    pub fn create(path: &Path, n_joints: usize) -> Result<Self, CliError> {
        let mut sink = CsvSink { path: path.to_path_buf(), out: create(path)?, rows: 0 };
        let mut head = String::from("trial");
        for j in 0..n_joints {
            head += &format!(",mae_{j}");
        }
        head += ",mean_mae,task,target,payload,band,push,plastic\n";
        sink.line(&head)?;
        Ok(TrialsCsv(sink))
    }

    pub fn write(&mut self, r: &TrialRecord) -> Result<(), CliError> {
        let mut s = r.trial.to_string();
        for m in &r.mae {
            s += &format!(",{m}");
        }
        let target = r.target.map(|t| t.to_string()).unwrap_or_default();
        let b = |f: bool| u8::from(f);
        s += &format!(
            ",{},{},{target},{},{},{},{}\n",
            r.mean_mae,
            r.task,
            b(r.payload),
            b(r.band),
            b(r.push),
            b(r.plastic)
        );
        self.0.row(&s)
    }

    pub fn finish(mut self) -> Result<u64, CliError> {
        self.0.terminate()?;
        Ok(self.0.rows())
    }
}

type Gz = GzEncoder<BufWriter<File>>;

fn create_gz(path: &Path) -> Result<Gz, CliError> {
    Ok(GzEncoder::new(create(path)?, Compression::fast()))
}

fn finish_gz(mut sink: CsvSink<Gz>) -> Result<u64, CliError> {
    sink.terminate()?;
    let path = sink.path.clone();
    sink.out.finish().and_then(|mut w| w.flush()).map_err(io_err(&path))?;
    Ok(sink.rows)
}

pub struct StepsCsv {
    sink: CsvSink<Gz>,
    buf: String,
}

impl StepsCsv {
    pub fn create(path: &Path, n_joints: usize) -> Result<Self, CliError> {
        let mut sink = CsvSink { path: path.to_path_buf(), out: create_gz(path)?, rows: 0 };
        let mut head = String::from("trial,step,t");
        for prefix in ["q_d", "q_a", "tau", "dcn_ag", "dcn_an"] {
            for j in 0..n_joints {
                head += &format!(",{prefix}_{j}");
            }
        }
        head.push('\n');
        sink.line(&head)?;
        Ok(StepsCsv { sink, buf: String::new() })
    }

    pub fn write(&mut self, r: &StepRecord<'_>) -> Result<(), CliError> {
        use std::fmt::Write as _;
        let b = &mut self.buf;
        b.clear();
        let _ = write!(b, "{},{},{}", r.trial, r.step, r.t);
        for v in r.q_d.iter().chain(r.q_a).chain(r.tau) {
            let _ = write!(b, ",{v}");
        }
        for c in r.counts {
            let _ = write!(b, ",{}", c.agonist);
        }
        for c in r.counts {
            let _ = write!(b, ",{}", c.antagonist);
        }
        b.push('\n');
        let line = std::mem::take(&mut self.buf);
        let res = self.sink.row(&line);
        self.buf = line;
        res
    }

    pub fn finish(self) -> Result<u64, CliError> {
        finish_gz(self.sink)
    }
}

pub struct SpikesCsv {
    sink: CsvSink<Gz>,
    buf: String,
}

impl SpikesCsv {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut sink = CsvSink { path: path.to_path_buf(), out: create_gz(path)?, rows: 0 };
        sink.line("neuron_id,t\n")?;
        Ok(SpikesCsv { sink, buf: String::new() })
    }

    pub fn write(&mut self, spikes: &[SpikeEvent]) -> Result<(), CliError> {
        use std::fmt::Write as _;
        self.buf.clear();
        for s in spikes {
            let _ = writeln!(self.buf, "{},{}", s.neuron_id, s.time / 1000.0);
        }
        self.sink.rows += spikes.len() as u64;
        let chunk = std::mem::take(&mut self.buf);
        let res = self.sink.line(&chunk);
        self.buf = chunk;
        res
    }

    pub fn finish(self) -> Result<u64, CliError> {
        finish_gz(self.sink)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: u64,
    /// False when the run stopped before the terminator was written.
    pub complete: bool,
    pub sha256: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepStats {
    pub samples: usize,
    pub median_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

impl StepStats {
    /// Nearest-rank percentiles of per-step compute times in nanoseconds.
    pub fn from_ns(ns: &[u32]) -> Option<Self> {
        if ns.is_empty() {
            return None;
        }
        let mut v = ns.to_vec();
        v.sort_unstable();
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1] as f64 / 1000.0;
        Some(StepStats { samples: v.len(), median_us: rank(0.5), p99_us: rank(0.99), max_us: rank(1.0) })
    }
}

/// Linear extrapolation of the median step cost to the full-size network.
#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub method: &'static str,
    pub run_synapses: usize,
    pub full_synapses: usize,
    pub median_us: f64,
    pub realtime_factor: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub artifact: &'static str,
    pub version: &'static str,
    /// `ok` or `failed`.
    pub status: &'static str,
    pub error: Option<String>,
    pub seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub trials_completed: usize,
    pub step_compute: Option<StepStats>,
    pub full_scale: Option<Extrapolation>,
    pub pf_pc_weights: Option<WeightRange>,
    pub files: Vec<FileEntry>,
    pub config: serde_json::Value,
}

impl Manifest {
    /// Write to `dir/manifest.json` via a temporary file and a rename, so a
    /// reader never sees a half-written manifest.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!(".{MANIFEST_FILE}.tmp"));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(format!("manifest: {e}")))?;
        std::fs::write(&tmp, text + "\n").map_err(io_err(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
