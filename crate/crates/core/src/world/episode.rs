//! The half-second control loop and its records.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{command_for, MotorCommand, ACTIONS};
use crate::arbitration::{Controller, ControllerId, SchemeTable, SelectionContext, SelectionStats};
use crate::error::{Error, Result};
use crate::immune::{build_antigen_array, IdiotopeMatrix, ImmuneConfig, ParatopeMatrix};
use crate::rl::{self, RewardConfig};
use crate::sensing::{detect_antigens, dominant_of, AntigenSet, OPEN_SPACE};
use crate::TICK_SECONDS;

use super::{
    sense, step, Arena, Pose, RobotState, WorldMap, DEFAULT_MAX_TIME, ROBOT_RADIUS, SPEED_NOISE,
    START_JITTER, START_JITTER_HEADING, TURN_NOISE,
};

/// Every tunable that affects an episode. Echoed into each `RunRecord`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub immune: ImmuneConfig,
    pub rewards: RewardConfig,
    pub schemes: SchemeTable,
    /// Simulated seconds before the run is abandoned.
    pub max_time: f64,
    #[serde(default)]
    pub noise: MotionNoise,
}

/// Uniform actuation noise applied to every motor command: speed is scaled
/// by `1 ± speed` and `± turn` rad/s is added to the turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionNoise {
    pub speed: f64,
    pub turn: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        MotionNoise {
            speed: SPEED_NOISE,
            turn: TURN_NOISE,
        }
    }
}

impl MotionNoise {
    pub const NONE: MotionNoise = MotionNoise {
        speed: 0.0,
        turn: 0.0,
    };

    fn perturb(&self, cmd: MotorCommand, rng: &mut ChaCha8Rng) -> MotorCommand {
        let mut draw = |half: f64| {
            if half > 0.0 {
                rng.gen_range(-half..=half)
            } else {
                0.0
            }
        };
        let scale = 1.0 + draw(self.speed);
        let dw = draw(self.turn);
        MotorCommand {
            v: cmd.v * scale,
            w: cmd.w + dw,
        }
    }
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            immune: ImmuneConfig::default(),
            rewards: RewardConfig::default(),
            schemes: SchemeTable::default(),
            max_time: DEFAULT_MAX_TIME,
            noise: MotionNoise::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.immune.validate()?;
        self.rewards.validate()?;
        self.schemes.validate()?;
        if !(self.max_time >= 0.0) {
            return Err(Error::Config(format!(
                "max_time must be non-negative, got {}",
                self.max_time
            )));
        }
        let n = self.noise;
        if !(0.0..1.0).contains(&n.speed) || !(n.turn >= 0.0 && n.turn.is_finite()) {
            return Err(Error::Config(format!(
                "motion noise needs 0 <= speed < 1 and turn >= 0, got speed={} turn={}",
                n.speed, n.turn
            )));
        }
        Ok(())
    }
}

/// One control tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickTrace {
    pub tick: u64,
    /// Decision time (s).
    pub t: f64,
    #[serde(with = "antigen_text")]
    pub presenting: AntigenSet,
    pub dominant: usize,
    pub alpha: usize,
    pub chosen: usize,
    pub mu_event: bool,
    /// A stall antigen presented on this tick or the one before.
    pub stall_window: bool,
    /// Robot stall state after this tick's motion.
    pub stalled: bool,
    pub tau: f64,
    pub e_av: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

mod antigen_text {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::sensing::AntigenSet;

    pub fn serialize<S: Serializer>(set: &AntigenSet, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(set)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AntigenSet, D::Error> {
        let text = String::deserialize(d)?;
        let ids: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(D::Error::custom))
            .collect::<Result<_, _>>()?;
        AntigenSet::try_from(ids).map_err(D::Error::custom)
    }
}

/// Outcome of one episode. The trace itself is written separately as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub controller: ControllerId,
    /// World id or map path as given.
    pub world: String,
    pub seed: u64,
    pub config: EpisodeConfig,
    pub initial_paratope: ParatopeMatrix,
    pub completed: bool,
    pub ticks: u64,
    /// Task time (s): ticks × 0.5, stalled time included.
    #[serde(rename = "T")]
    pub time: f64,
    pub sigma: u32,
    pub mu_rate: f64,
    pub stats: SelectionStats,
    pub final_pose: Pose,
    pub passed_doors: Vec<usize>,
    /// Trace CSV path relative to the record, once written.
    #[serde(default)]
    pub trace_file: Option<String>,
    #[serde(skip)]
    pub trace: Vec<TickTrace>,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A single run ready to execute.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    pub map: &'a WorldMap,
    pub world: String,
    pub controller: ControllerId,
    pub paratope: ParatopeMatrix,
    pub seed: u64,
    pub config: EpisodeConfig,
}

impl Episode<'_> {
    pub fn run(&self) -> Result<RunRecord> {
        run_episode(
            self.map,
            &self.world,
            self.controller,
            &self.paratope,
            self.seed,
            &self.config,
        )
    }
}

/// Runs one episode until the robot enters the goal or `max_time` passes.
///
/// Per tick: sense, detect antigens (open space if none), select, move,
/// block crossed doors, sense again, reinforce `P[chosen][dominant]`.
pub fn run_episode(
    map: &WorldMap,
    world: &str,
    controller: ControllerId,
    p0: &ParatopeMatrix,
    seed: u64,
    cfg: &EpisodeConfig,
) -> Result<RunRecord> {
    cfg.validate()?;
    let mut ctrl = Controller::new(
        controller,
        cfg.immune,
        IdiotopeMatrix::canonical(),
        &cfg.schemes,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut motion_rng = ChaCha8Rng::seed_from_u64(seed);
    motion_rng.set_stream(2);
    let mut arena = Arena::new(map);
    let mut robot = RobotState::new(start_pose(map, seed));
    let mut p = p0.clone();
    let mut stats = SelectionStats::default();
    let mut trace = Vec::new();
    let mut ctx = SelectionContext::default();
    let mut prev_stall = false;
    let mut summary = sense(&robot.pose, &arena, 0.0, 0);
    let mut ticks = 0u64;
    let completed = loop {
        if map.in_goal(robot.pose.position()) {
            break true;
        }
        if ticks as f64 * TICK_SECONDS >= cfg.max_time {
            break false;
        }
        let mut presenting = detect_antigens(&summary);
        if presenting.is_empty() {
            presenting.insert(OPEN_SPACE);
        }
        let dominant = dominant_of(presenting).expect("presenting set is non-empty");
        let report =
            build_antigen_array(presenting, dominant, &p).expect("dominant antigen is presenting");
        let stall_now = presenting.has_stall();
        ctx.stall_window = stall_now || prev_stall;

        let sel = ctrl.select(&p, &report, &ctx, &mut rng);
        let cmd = cfg.noise.perturb(
            command_for(&ACTIONS[sel.antibody], &summary),
            &mut motion_rng,
        );
        let moved = step(&mut robot, &cmd, &mut arena, TICK_SECONDS);
        let after = sense(
            &robot.pose,
            &arena,
            moved.distance_moved,
            robot.stationary_ticks,
        );
        let outcome = rl::evaluate(&summary, &after, dominant, &cfg.rewards);
        rl::apply(&mut p, sel.antibody, dominant, outcome.tau);

        stats = stats.record(sel.antibody, sel.alpha, ctx.stall_window);
        trace.push(TickTrace {
            tick: ticks,
            t: ticks as f64 * TICK_SECONDS,
            presenting,
            dominant,
            alpha: sel.alpha,
            chosen: sel.antibody,
            mu_event: sel.antibody != sel.alpha,
            stall_window: ctx.stall_window,
            stalled: robot.stalled,
            tau: outcome.tau,
            e_av: summary.e_av,
            x: robot.pose.x,
            y: robot.pose.y,
            heading: robot.pose.theta,
        });

        ctx.last_rl = outcome;
        prev_stall = stall_now;
        summary = after;
        ticks += 1;
    };

    Ok(RunRecord {
        controller,
        world: world.to_string(),
        seed,
        config: cfg.clone(),
        initial_paratope: p0.clone(),
        completed,
        ticks,
        time: ticks as f64 * TICK_SECONDS,
        sigma: robot.stall_events,
        mu_rate: stats.mu_rate(),
        stats,
        final_pose: robot.pose,
        passed_doors: robot.passed_doors.iter().copied().collect(),
        trace_file: None,
        trace,
    })
}

/// The map's start pose perturbed by the run seed, on its own RNG stream
/// so selection draws are unaffected. Falls back to the nominal pose if no
/// collision-free draw is found.
pub fn start_pose(map: &WorldMap, seed: u64) -> Pose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let solids = map.static_segments();
    for _ in 0..16 {
        let p = Pose {
            x: map.start.x + rng.gen_range(-START_JITTER..=START_JITTER),
            y: map.start.y + rng.gen_range(-START_JITTER..=START_JITTER),
            theta: map.start.theta + rng.gen_range(-START_JITTER_HEADING..=START_JITTER_HEADING),
        };
        if map.is_free(p.position(), ROBOT_RADIUS, &solids) && !map.in_goal(p.position()) {
            return p;
        }
    }
    map.start
}

pub fn trace_to_csv<W: Write>(trace: &[TickTrace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| csv_error(e.into()))?;
    Ok(())
}

pub fn trace_from_csv<R: Read>(input: R) -> Result<Vec<TickTrace>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_error)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        what: "trace csv",
        line,
        msg: e.to_string(),
    }
}
