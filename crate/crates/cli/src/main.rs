//! `idionet` command-line front end.

mod plot;
mod replay;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use idionet::arbitration::ControllerId;
use idionet::config::{CampaignFile, DEFAULT_SEED};
use idionet::experiments::{
    init_paratope, paratope_seed, run_campaign, write_run, Campaign, WorldSummary,
};
use idionet::world::{run_episode, EpisodeConfig, WorldMap};

#[derive(Parser, Debug)]
#[command(
    name = "idionet",
    version,
    about = "Immune-network robot controller benchmark"
)]
struct Cli {
    /// More output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one episode and write its record and trace.
    Run(RunArgs),
    /// Run a full campaign and write summary, run table and records.
    Campaign(CampaignArgs),
    /// Re-execute a run record and compare traces.
    Replay(ReplayArgs),
    /// Render charts from a campaign summary.
    Plot(PlotArgs),
    /// Check a map file or shipped world id.
    ValidateMap(ValidateArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Params {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped world id (m1, m2) or map path.
    #[arg(long)]
    world: Option<String>,
    #[arg(long, env = "IDIONET_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    /// Seconds before a run is abandoned.
    #[arg(long)]
    max_time: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    controller: String,
    /// Initial paratope: D1, D2, D3 or an integer seed.
    #[arg(long, default_value = "D1")]
    paratope: String,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args, Debug)]
struct CampaignArgs {
    /// Comma-separated controllers; default all ten.
    #[arg(long, value_delimiter = ',')]
    controller: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    params: Params,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Run record JSON.
    record: PathBuf,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    k2: Option<f64>,
    #[arg(long)]
    max_time: Option<f64>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// `summary.json` from a campaign.
    summary: PathBuf,
    /// Defaults to the summary's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    map: String,
}

/// A failure and the exit code it maps to.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Usage<T> {
    fn usage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Usage<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

struct Out {
    verbose: u8,
    quiet: bool,
}

impl Out {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 && !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = Out {
        verbose: cli.verbose,
        quiet: cli.quiet,
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, &out),
        Command::Campaign(a) => cmd_campaign(a, &out),
        Command::Replay(a) => cmd_replay(a, &out),
        Command::Plot(a) => cmd_plot(a, &out),
        Command::ValidateMap(a) => cmd_validate(a, &out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Config file first, then command-line overrides.
fn build_campaign(p: &Params) -> anyhow::Result<Campaign> {
    let mut file = match &p.config {
        Some(path) => CampaignFile::load(path)?,
        None => CampaignFile::default(),
    };
    if let Some(w) = &p.world {
        file.world = Some(w.clone());
    }
    if let Some(s) = p.seed {
        file.seed = Some(s);
    }
    if let Some(t) = p.max_time {
        file.max_time = Some(t);
    }
    let mut c = file.into_campaign()?;
    apply_immune(&mut c.config, p.b, p.k1, p.k2);
    c.config.validate()?;
    Ok(c)
}

fn apply_immune(cfg: &mut EpisodeConfig, b: Option<f64>, k1: Option<f64>, k2: Option<f64>) {
    if let Some(b) = b {
        cfg.immune.b = b;
    }
    if let Some(k1) = k1 {
        cfg.immune.k1 = k1;
    }
    if let Some(k2) = k2 {
        cfg.immune.k2 = k2;
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_run(a: RunArgs, out: &Out) -> Result<ExitCode, Failure> {
    let controller: ControllerId = a.controller.parse().usage()?;
    let c = build_campaign(&a.params).usage()?;
    let map = WorldMap::resolve(&c.world).usage()?;
    let p0 = init_paratope(paratope_seed(&a.paratope).usage()?);
    let seed = a.params.seed.unwrap_or(DEFAULT_SEED);
    out.detail(format!("config: {}", serde_json::to_string(&c.config)?));

    let mut rec = run_episode(&map, &c.world, controller, &p0, seed, &c.config)?;
    create_dir(&a.out)?;
    let stem = format!("{}_{}_{}", controller.name(), a.paratope, seed);
    write_run(&mut rec, &a.out, &stem)?;
    out.say(format!(
        "{controller} on {} seed {seed}: {} T {:.1} s, sigma {}, mu rate {:.3}",
        c.world,
        if rec.completed {
            "completed"
        } else {
            "timed out"
        },
        rec.time,
        rec.sigma,
        rec.mu_rate
    ));
    out.say(format!(
        "wrote {}",
        a.out.join(format!("{stem}.json")).display()
    ));
    Ok(ExitCode::SUCCESS)
}

fn cmd_campaign(a: CampaignArgs, out: &Out) -> Result<ExitCode, Failure> {
    let mut c = build_campaign(&a.params).usage()?;
    if !a.controller.is_empty() {
        c.controllers = a
            .controller
            .iter()
            .map(|s| s.parse::<ControllerId>())
            .collect::<Result<_, _>>()
            .usage()?;
    }
    if let Some(n) = a.runs {
        c.runs_per_paratope = n;
    }
    if a.jobs.is_some() {
        c.jobs = a.jobs;
    }
    if c.runs_per_paratope == 0 || a.jobs == Some(0) {
        return Err(Failure::Usage(anyhow!(
            "--runs and --jobs must be positive"
        )));
    }
    WorldMap::resolve(&c.world).usage()?;

    let mut res = run_campaign(&c)?;
    create_dir(&a.out)?;
    res.write(&a.out)?;
    let s = &res.summary;
    out.say(format!(
        "{} runs on {}, phi {}",
        res.rows.len(),
        s.world,
        s.phi.map_or("n/a".into(), |p| format!("{p:.3}"))
    ));
    let opt = |v: Option<f64>| v.map_or("   n/a".into(), |v| format!("{v:6.1}"));
    out.say("ctrl  done      T  sigma      F   mu%  good%  bad%");
    for cs in &s.controllers {
        out.say(format!(
            "{:<4} {:>2}/{:<2} {} {} {} {:5.1} {:6.1} {:5.1}",
            cs.controller.to_string(),
            cs.completed,
            cs.runs,
            opt(cs.mean_t),
            opt(cs.mean_sigma),
            opt(cs.mean_f),
            100.0 * cs.mu_rate,
            cs.good_pct,
            cs.bad_pct
        ));
    }
    for r in &s.timed_out {
        out.detail(format!(
            "timed out: {} {} seed {}",
            r.controller, r.paratope, r.seed
        ));
    }
    out.say(format!("wrote {}", a.out.join("summary.json").display()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(a: ReplayArgs, out: &Out) -> Result<ExitCode, Failure> {
    let input = replay::load(&a.record).usage()?;
    let mut cfg = input.record.config.clone();
    apply_immune(&mut cfg, a.b, a.k1, a.k2);
    if let Some(t) = a.max_time {
        cfg.max_time = t;
    }
    cfg.validate().usage()?;
    let report = replay::verify(&input, &cfg)?;
    out.say(report.to_string());
    Ok(if report.matched() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_plot(a: PlotArgs, out: &Out) -> Result<ExitCode, Failure> {
    let text = fs::read_to_string(&a.summary)
        .with_context(|| format!("reading {}", a.summary.display()))
        .usage()?;
    let summary: WorldSummary = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.summary.display()))
        .usage()?;
    if summary.controllers.is_empty() {
        return Err(Failure::Runtime(anyhow!("summary has no controllers")));
    }
    let dir = a.out.unwrap_or_else(|| {
        a.summary
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    create_dir(&dir)?;
    for (name, svg) in plot::render_all(&summary) {
        let path = dir.join(name);
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        out.say(format!("wrote {}", path.display()));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: ValidateArgs, out: &Out) -> Result<ExitCode, Failure> {
    let map = WorldMap::resolve(&a.map).usage()?;
    let report = map.validate().usage()?;
    out.say(format!(
        "{}: ok ({} walls, {} obstacles, {} doors, {} reachable cells)",
        map.name, report.walls, report.obstacles, report.doors, report.reachable_cells
    ));
    Ok(ExitCode::SUCCESS)
}
