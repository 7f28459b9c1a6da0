//! Grid sweeps over config keys.
//!
//! A grid file lists, under `[grid]`, config keys in override syntax with a
//! list of values each:
//!
//! ```toml
//! window = 100               # trials in the final MAE window (optional)
//!
//! [grid]
//! "decoder.gains" = [[0.25, 0.25], [0.5, 0.5], [1.0, 1.0]]
//! "plasticity.alpha_ltp" = [5e-5, 1e-4]
//! ```
//!
//! Every combination becomes one run under `<out>/point_NNN`, and
//! `<out>/summary.csv` gets one row per point. Keys vary in the order
//! listed, the last fastest. A failing point is recorded and the sweep goes
//! on.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Deserialize;

use crate::config::{load_config, RunConfig};
use crate::runner::run;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// `(key, values)` in file order.
    pub axes: Vec<(String, Vec<toml::Value>)>,
    /// Trials averaged for the final MAE; defaults to the last fifth.
    pub window: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    window: Option<usize>,
    grid: toml::Table,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: GridFile = toml::from_str(text).map_err(|e| CliError::Parse(format!("grid: {e}")))?;
        let mut axes = Vec::new();
        for (key, v) in file.grid {
            match v {
                toml::Value::Array(vals) if !vals.is_empty() => axes.push((key, vals)),
                _ => return Err(CliError::Parse(format!("grid: {key} needs a non-empty list of values"))),
            }
        }
        Ok(Grid { axes, window: file.window })
    }

    /// Every combination as override strings, last axis fastest.
    pub fn points(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for (key, vals) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(format!("{key}={}", render(v)));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// A value in override syntax; strings are quoted so they parse back.
fn render(v: &toml::Value) -> String {
    v.to_string()
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub index: usize,
    pub overrides: Vec<String>,
    pub dir: PathBuf,
    /// Mean of the per-trial mean MAE over the final window.
    pub final_mae: Result<f64, String>,
}

/// Mean of `mean_mae` over the last `window` trials.
pub fn final_window_mae(trials: &[cerebellar::control::TrialRecord], window: Option<usize>) -> f64 {
    let w = window.unwrap_or(trials.len().div_ceil(5)).clamp(1, trials.len().max(1));
    let tail = &trials[trials.len().saturating_sub(w)..];
    tail.iter().map(|t| t.mean_mae).sum::<f64>() / tail.len() as f64
}

/// Run every grid point of `base` (already carrying any global overrides)
/// with up to `workers` runs in flight, then write `summary.csv`.
pub fn sweep(
    config: &Path,
    base_overrides: &[String],
    grid: &Grid,
    out: &Path,
    workers: usize,
) -> Result<Vec<PointResult>, CliError> {
    let points = grid.points();
    // Validate every point before simulating any of them.
    let mut cfgs: Vec<RunConfig> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let sets: Vec<String> = base_overrides.iter().chain(p).cloned().collect();
        let mut cfg = load_config(config, &sets).map_err(|e| match e {
            CliError::Invalid(m) => CliError::Invalid(format!("grid point {i} ({}): {m}", p.join(" "))),
            other => other,
        })?;
        cfg.output.dir = out.join(format!("point_{i:03}"));
        cfgs.push(cfg);
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;

    let next = Mutex::new(0usize);
    let results = Mutex::new(Vec::with_capacity(cfgs.len()));
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, cfgs.len().max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("sweep counter");
                    let i = *n;
                    *n += 1;
                    i
                };
                let Some(cfg) = cfgs.get(i) else { break };
                let final_mae = run(cfg).map(|o| final_window_mae(&o.trials, grid.window)).map_err(|e| e.to_string());
                let r = PointResult { index: i, overrides: points[i].clone(), dir: cfg.output.dir.clone(), final_mae };
                results.lock().expect("sweep results").push(r);
            });
        }
    });
    let mut results = results.into_inner().expect("sweep results");
    results.sort_by_key(|r| r.index);
    write_summary(&out.join("summary.csv"), grid, &results)?;
    Ok(results)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_summary(path: &Path, grid: &Grid, results: &[PointResult]) -> Result<(), CliError> {
    let mut text = String::from("point,dir");
    for (key, _) in &grid.axes {
        text += &format!(",{}", csv_field(key));
    }
    text += ",status,final_mae\n";
    for r in results {
        text += &format!("{},{}", r.index, csv_field(&r.dir.display().to_string()));
        for o in &r.overrides {
            let v = o.split_once('=').map_or("", |(_, v)| v);
            text += &format!(",{}", csv_field(v));
        }
        match &r.final_mae {
            Ok(m) => text += &format!(",ok,{m}\n"),
            Err(e) => text += &format!(",{},\n", csv_field(&format!("failed: {e}"))),
        }
    }
    text += &format!("#END,{}\n", results.len());
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
