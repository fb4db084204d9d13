use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arbitration::{ControllerId, SelectionStats};
use crate::error::{Error, Result};
use crate::world::{run_episode, trace_to_csv, EpisodeConfig, RunRecord, WorldMap};

use super::stats::{classify_runs, compute_phi, fitness, ttest_one_tailed, TTest};
use super::{default_paratopes, init_paratope, paratope_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    /// Shipped world id or map path.
    pub world: String,
    pub controllers: Vec<ControllerId>,
    pub runs_per_paratope: usize,
    /// `D1`..`D3` or integer seeds.
    pub paratopes: Vec<String>,
    pub rng_base_seed: u64,
    pub config: EpisodeConfig,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl Campaign {
    /// Ten controllers, two paratopes, six runs each.
    pub fn standard(world: &str, rng_base_seed: u64) -> Self {
        Campaign {
            world: world.to_string(),
            controllers: ControllerId::ALL.to_vec(),
            runs_per_paratope: 6,
            paratopes: default_paratopes(world),
            rng_base_seed,
            config: EpisodeConfig::default(),
            jobs: None,
        }
    }
}

/// Seed of run `run` from paratope slot `slot`. The same seeds are shared
/// by every controller.
pub fn run_seed(base: u64, runs_per_paratope: usize, slot: usize, run: usize) -> u64 {
    base.wrapping_add((slot * runs_per_paratope + run) as u64)
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub controller: ControllerId,
    pub paratope: String,
    pub seed: u64,
    pub completed: bool,
    #[serde(rename = "T")]
    pub time: f64,
    pub sigma: u32,
    /// Empty for timed-out runs.
    #[serde(rename = "F")]
    pub fitness: Option<f64>,
    pub mu_rate: f64,
    pub good: bool,
    pub bad: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub controller: ControllerId,
    pub runs: usize,
    pub completed: usize,
    pub mean_t: Option<f64>,
    pub mean_sigma: Option<f64>,
    pub mean_f: Option<f64>,
    /// Pooled over every tick of every run, timed-out ones included.
    pub mu_rate: f64,
    pub stalled_mu_rate: f64,
    pub free_mu_rate: f64,
    /// Mean of the per-run rates.
    pub mean_run_mu_rate: f64,
    pub good_pct: f64,
    pub bad_pct: f64,
}

/// A controller against I_D; `None` entries lack two completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub controller: ControllerId,
    #[serde(rename = "T")]
    pub time: Option<TTest>,
    pub sigma: Option<TTest>,
    #[serde(rename = "F")]
    pub fitness: Option<TTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSummary {
    pub world: String,
    pub rng_base_seed: u64,
    /// Seconds per stall; `None` if no completed run stalled.
    pub phi: Option<f64>,
    pub controllers: Vec<ControllerSummary>,
    /// Each rival vs I_D, H1: I_D has the lower mean.
    pub significance: Vec<SignificanceRow>,
    pub timed_out: Vec<RunRow>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub summary: WorldSummary,
    pub rows: Vec<RunRow>,
    pub records: Vec<RunRecord>,
}

/// Runs every (controller, paratope, run) episode, possibly in parallel,
/// then reduces in a fixed order.
pub fn run_campaign(c: &Campaign) -> Result<CampaignResult> {
    if c.controllers.is_empty() {
        return Err(Error::Config("campaign has no controllers".into()));
    }
    if c.runs_per_paratope == 0 || c.paratopes.is_empty() {
        return Err(Error::Config("campaign has no runs".into()));
    }
    c.config.validate()?;
    let map = WorldMap::resolve(&c.world)?;
    let seeds = c
        .paratopes
        .iter()
        .map(|p| paratope_seed(p))
        .collect::<Result<Vec<_>>>()?;
    let paratopes: Vec<_> = seeds.iter().map(|&s| init_paratope(s)).collect();

    let mut jobs = Vec::new();
    for &ctrl in &c.controllers {
        for slot in 0..c.paratopes.len() {
            for run in 0..c.runs_per_paratope {
                jobs.push((
                    ctrl,
                    slot,
                    run_seed(c.rng_base_seed, c.runs_per_paratope, slot, run),
                ));
            }
        }
    }
    let exec = || {
        jobs.par_iter()
            .map(|&(ctrl, slot, seed)| {
                run_episode(&map, &c.world, ctrl, &paratopes[slot], seed, &c.config)
            })
            .collect::<Result<Vec<_>>>()
    };
    let records = match c.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(exec)?,
        None => exec()?,
    };
    let slots: Vec<String> = jobs.iter().map(|j| c.paratopes[j.1].clone()).collect();
    Ok(summarize(c, records, &slots))
}

fn summarize(c: &Campaign, records: Vec<RunRecord>, slots: &[String]) -> CampaignResult {
    let done: Vec<&RunRecord> = records.iter().filter(|r| r.completed).collect();
    let phi = compute_phi(
        &done
            .iter()
            .map(|r| (r.time, f64::from(r.sigma)))
            .collect::<Vec<_>>(),
    );
    let fit: Vec<f64> = done
        .iter()
        .map(|r| fitness(r.time, f64::from(r.sigma), phi))
        .collect();
    let mut classes = classify_runs(&fit).into_iter();

    let rows: Vec<RunRow> = records
        .iter()
        .zip(slots)
        .map(|(r, slot)| {
            let (f, class) = if r.completed {
                (
                    Some(fitness(r.time, f64::from(r.sigma), phi)),
                    classes.next().unwrap_or_default(),
                )
            } else {
                (None, Default::default())
            };
            RunRow {
                controller: r.controller,
                paratope: slot.clone(),
                seed: r.seed,
                completed: r.completed,
                time: r.time,
                sigma: r.sigma,
                fitness: f,
                mu_rate: r.mu_rate,
                good: class.good,
                bad: class.bad,
            }
        })
        .collect();

    let controllers: Vec<ControllerSummary> = c
        .controllers
        .iter()
        .map(|&id| controller_summary(id, &records, &rows))
        .collect();

    let column = |id: ControllerId, pick: fn(&RunRow) -> f64| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.controller == id && r.completed)
            .map(pick)
            .collect()
    };
    let significance = if c.controllers.contains(&ControllerId::Idiotypic) {
        c.controllers
            .iter()
            .filter(|id| !id.is_idiotypic())
            .map(|&id| {
                let test = |pick: fn(&RunRow) -> f64| {
                    ttest_one_tailed(&column(ControllerId::Idiotypic, pick), &column(id, pick))
                };
                SignificanceRow {
                    controller: id,
                    time: test(|r| r.time),
                    sigma: test(|r| f64::from(r.sigma)),
                    fitness: test(|r| r.fitness.unwrap_or(f64::NAN)),
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    let summary = WorldSummary {
        world: c.world.clone(),
        rng_base_seed: c.rng_base_seed,
        phi,
        controllers,
        significance,
        timed_out: rows.iter().filter(|r| !r.completed).cloned().collect(),
    };
    CampaignResult {
        summary,
        rows,
        records,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

fn controller_summary(
    id: ControllerId,
    records: &[RunRecord],
    rows: &[RunRow],
) -> ControllerSummary {
    let mine: Vec<&RunRow> = rows.iter().filter(|r| r.controller == id).collect();
    let done: Vec<&&RunRow> = mine.iter().filter(|r| r.completed).collect();
    let pooled = records
        .iter()
        .filter(|r| r.controller == id)
        .fold(SelectionStats::default(), |acc, r| acc.merge(&r.stats));
    let pct = |n: usize| {
        if mine.is_empty() {
            0.0
        } else {
            100.0 * n as f64 / mine.len() as f64
        }
    };
    ControllerSummary {
        controller: id,
        runs: mine.len(),
        completed: done.len(),
        mean_t: mean(done.iter().map(|r| r.time)),
        mean_sigma: mean(done.iter().map(|r| f64::from(r.sigma))),
        mean_f: mean(done.iter().filter_map(|r| r.fitness)),
        mu_rate: pooled.mu_rate(),
        stalled_mu_rate: pooled.stalled_mu_rate(),
        free_mu_rate: pooled.free_mu_rate(),
        mean_run_mu_rate: mean(mine.iter().map(|r| r.mu_rate)).unwrap_or(0.0),
        good_pct: pct(mine.iter().filter(|r| r.good).count()),
        bad_pct: pct(mine.iter().filter(|r| r.bad).count()),
    }
}

impl CampaignResult {
    /// Writes `summary.json`, `runs.csv`, and per run a record JSON plus its
    /// trace CSV under `runs/`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        let runs_dir = dir.join("runs");
        fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
        for (rec, row) in self.records.iter_mut().zip(&self.rows) {
            let stem = format!("{}_{}_{}", rec.controller.name(), row.paratope, rec.seed);
            write_run(rec, &runs_dir, &stem)?;
        }
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&self.summary)?)
            .map_err(|e| Error::io(&path, e))?;
        let path = dir.join("runs.csv");
        write_rows(&self.rows, &path)
    }
}

/// Writes `<stem>.json` and `<stem>.trace.csv`, recording the trace file
/// name in the record.
pub fn write_run(rec: &mut RunRecord, dir: &Path, stem: &str) -> Result<()> {
    let trace_name = format!("{stem}.trace.csv");
    let trace_path = dir.join(&trace_name);
    let f = File::create(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    trace_to_csv(&rec.trace, BufWriter::new(f))?;
    rec.trace_file = Some(trace_name);
    let json_path = dir.join(format!("{stem}.json"));
    fs::write(&json_path, rec.to_json()?).map_err(|e| Error::io(&json_path, e))
}

fn write_rows(rows: &[RunRow], path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "controller,paratope,seed,T,sigma,F,mu_rate,good,bad").map_err(io)?;
    for r in rows {
        let f = r.fitness.map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.controller.name(),
            r.paratope,
            r.seed,
            r.time,
            r.sigma,
            f,
            r.mu_rate,
            r.good,
            r.bad
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
