//! Run configuration: one TOML file holding the experiment plus an
//! `[output]` section, with `section.key=value` overrides on top.
//!
//! A run's own `manifest.json` is also accepted as a config file; its
//! `config` snapshot is used, so any run can be relaunched from its output
//! directory.

use std::path::{Path, PathBuf};

use cerebellar::control::{ExperimentConfig, LoopError};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// How much of each trial is written to disk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// trials.csv only.
    #[default]
    Trial,
    /// Adds steps.csv.gz.
    Step,
    /// Adds steps.csv.gz and spikes.csv.gz.
    Spikes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trace: TraceLevel,
    /// Sleep so that each control step takes at least 2 ms of wall time.
    pub realtime_pacing: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("runs/latest"), trace: TraceLevel::Trial, realtime_pacing: false }
    }
}

/// Loaded with [`load_config`] rather than `Deserialize`, because the
/// experiment part rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { experiment: ExperimentConfig::default(), output: OutputConfig::default() }
    }
}

impl RunConfig {
    /// Parse a TOML document, apply overrides, then validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Parse(e.to_string()))?;
        Self::from_table(table, overrides)
    }

    fn from_table(mut table: toml::Table, overrides: &[String]) -> Result<Self, CliError> {
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let output = match table.remove("output") {
            Some(v) => OutputConfig::deserialize(v).map_err(|e| CliError::Parse(format!("[output]: {e}")))?,
            None => OutputConfig::default(),
        };
        // partial sections keep the desk defaults of the keys they omit
        let mut merged = to_table(&ExperimentConfig::default())?;
        merge(&mut merged, table);
        let experiment = ExperimentConfig::deserialize(toml::Value::Table(merged))
            .map_err(|e| CliError::Parse(e.to_string()))?;
        let cfg = RunConfig { experiment, output };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.experiment.validate().map_err(|e| match e {
            LoopError::Config(m) => CliError::Invalid(m),
            other => CliError::Invalid(other.to_string()),
        })
    }

    /// Render as TOML, every default spelled out.
    pub fn to_toml(&self) -> Result<String, CliError> {
        let mut table = to_table(&self.experiment)?;
        table.insert("output".into(), toml::Value::Table(to_table(&self.output)?));
        toml::to_string(&table).map_err(|e| CliError::Io(format!("serialising config: {e}")))
    }
}

/// Overlay `over` onto `base`, descending into tables and replacing
/// everything else, arrays included.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn to_table<T: Serialize>(v: &T) -> Result<toml::Table, CliError> {
    toml::Table::try_from(v).map_err(|e| CliError::Io(format!("serialising config: {e}")))
}

/// Load a TOML config or a `manifest.json`, then apply overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let located = |e: CliError| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    };
    if path.extension().is_some_and(|x| x == "json") {
        let doc: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let mut snapshot = doc.get("config").cloned().unwrap_or(doc);
        drop_nulls(&mut snapshot);
        let table = toml::Table::try_from(&snapshot)
            .map_err(|e| CliError::Parse(format!("{}: config snapshot: {e}", path.display())))?;
        return RunConfig::from_table(table, overrides).map_err(located);
    }
    RunConfig::from_toml_str(&text, overrides).map_err(located)
}

/// Unset options appear as `null` in JSON and simply go missing in TOML.
fn drop_nulls(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|_, x| !x.is_null());
            map.values_mut().for_each(drop_nulls);
        }
        serde_json::Value::Array(xs) => xs.iter_mut().for_each(drop_nulls),
        _ => {}
    }
}

/// Apply one `section.key=value` override. The value is read as a TOML
/// value (`0.5`, `[1, 2]`, `true`, `"eight"`); anything that does not parse
/// is taken as a bare string, so `task=eight` works.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("override {spec:?} is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Parse(format!("override {spec:?} has an empty key segment")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("split yields at least one segment");
    let mut cur = table;
    for p in parents {
        let slot = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = slot
            .as_table_mut()
            .ok_or_else(|| CliError::Parse(format!("override {spec:?}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
