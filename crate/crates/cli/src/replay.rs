use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use idionet::world::{run_episode, trace_to_csv, EpisodeConfig, RunRecord, WorldMap};
use serde_json::Value;

pub struct ReplayInput {
    pub record: RunRecord,
    pub trace_csv: Vec<u8>,
}

pub fn load(path: &Path) -> anyhow::Result<ReplayInput> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record =
        RunRecord::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let name = record
        .trace_file
        .as_ref()
        .ok_or_else(|| anyhow!("{} names no trace file", path.display()))?;
    let trace_path = path.parent().unwrap_or(Path::new("")).join(name);
    let trace_csv =
        fs::read(&trace_path).with_context(|| format!("reading trace {}", trace_path.display()))?;
    Ok(ReplayInput { record, trace_csv })
}

pub struct ReplayReport {
    /// First tick whose trace line differs, if any.
    pub divergent_tick: Option<usize>,
    /// Record fields (other than the trace) that differ.
    pub record_fields: Vec<String>,
    /// `path: recorded -> used`; against the defaults when no override was given.
    pub config_diff: Vec<String>,
    /// Replayed under a config other than the recorded one.
    pub config_changed: bool,
    pub ticks: usize,
}

impl ReplayReport {
    pub fn matched(&self) -> bool {
        self.divergent_tick.is_none() && self.record_fields.is_empty() && !self.config_changed
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.matched() {
            return write!(f, "MATCH ({} ticks)", self.ticks);
        }
        write!(f, "MISMATCH")?;
        if let Some(t) = self.divergent_tick {
            write!(f, " at tick {t}")?;
        }
        if !self.record_fields.is_empty() {
            write!(
                f,
                "\nrecord fields differ: {}",
                self.record_fields.join(", ")
            )?;
        }
        if !self.config_diff.is_empty() {
            let against = if self.config_changed {
                "replay"
            } else {
                "defaults"
            };
            write!(f, "\nconfig diff (recorded -> {against}):")?;
            for d in &self.config_diff {
                write!(f, "\n  {d}")?;
            }
        }
        Ok(())
    }
}

/// Re-executes the recorded run under `cfg` and compares it with the stored
/// record and trace.
pub fn verify(input: &ReplayInput, cfg: &EpisodeConfig) -> anyhow::Result<ReplayReport> {
    let rec = &input.record;
    let map = WorldMap::resolve(&rec.world)?;
    let mut fresh = run_episode(
        &map,
        &rec.world,
        rec.controller,
        &rec.initial_paratope,
        rec.seed,
        cfg,
    )?;
    let mut csv = Vec::new();
    trace_to_csv(&fresh.trace, &mut csv)?;
    fresh.trace_file = rec.trace_file.clone();

    let divergent_tick = first_divergent_line(&input.trace_csv, &csv);
    let record_fields =
        differing_paths(&serde_json::to_value(rec)?, &serde_json::to_value(&fresh)?)
            .into_iter()
            .filter(|d| !d.starts_with("config"))
            .collect();
    let config_changed = cfg != &rec.config;
    let baseline = if !config_changed {
        EpisodeConfig::default()
    } else {
        cfg.clone()
    };
    let config_diff = differing_paths(
        &serde_json::to_value(&rec.config)?,
        &serde_json::to_value(&baseline)?,
    );
    Ok(ReplayReport {
        divergent_tick,
        record_fields,
        config_diff,
        config_changed,
        ticks: fresh.trace.len(),
    })
}

/// Index of the first differing data line (header excluded), which is the
/// tick number.
fn first_divergent_line(a: &[u8], b: &[u8]) -> Option<usize> {
    if a == b {
        return None;
    }
    let la: Vec<&[u8]> = a.split(|&c| c == b'\n').collect();
    let lb: Vec<&[u8]> = b.split(|&c| c == b'\n').collect();
    let n = la.len().max(lb.len());
    (0..n)
        .find(|&i| la.get(i) != lb.get(i))
        .map(|i| i.saturating_sub(1))
}

/// Leaf paths where two JSON values differ, as `path: a -> b`.
fn differing_paths(a: &Value, b: &Value) -> Vec<String> {
    let mut out = Vec::new();
    walk("", a, b, &mut out);
    out
}

fn walk(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    let join = |k: &str| {
        if path.is_empty() {
            k.to_string()
        } else {
            format!("{path}.{k}")
        }
    };
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
            keys.sort();
            keys.dedup();
            for k in keys {
                walk(
                    &join(k),
                    x.get(k).unwrap_or(&Value::Null),
                    y.get(k).unwrap_or(&Value::Null),
                    out,
                );
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                walk(&join(&i.to_string()), u, v, out);
            }
        }
        _ if a != b => out.push(format!("{path}: {a} -> {b}")),
        _ => {}
    }
}
