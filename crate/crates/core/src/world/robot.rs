use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::actions::MotorCommand;
use crate::geometry::Segment;
use crate::sensing::{MOVE_EPSILON, STALL_TICKS};

use super::{Arena, Pose, ROBOT_RADIUS, SUBSTEP};

/// Bisection iterations when backing off to the contact point.
const CONTACT_ITERS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub radius: f64,
    pub stalled: bool,
    pub stall_events: u32,
    pub stationary_ticks: u32,
    pub passed_doors: BTreeSet<usize>,
}

impl RobotState {
    pub fn new(pose: Pose) -> Self {
        RobotState {
            pose,
            radius: ROBOT_RADIUS,
            stalled: false,
            stall_events: 0,
            stationary_ticks: 0,
            passed_doors: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// Path length this tick; zero whenever the robot hit something.
    pub distance_moved: f64,
    pub collided: bool,
    /// Doors crossed from their `from` side to their `to` side.
    pub crossed: Vec<usize>,
}

/// Exact unicycle motion over `dt`.
fn advance(p: &Pose, cmd: &MotorCommand, dt: f64) -> Pose {
    let theta = p.theta + cmd.w * dt;
    let (x, y) = if cmd.w.abs() < 1e-12 {
        (
            p.x + cmd.v * dt * p.theta.cos(),
            p.y + cmd.v * dt * p.theta.sin(),
        )
    } else {
        let r = cmd.v / cmd.w;
        (
            p.x + r * (theta.sin() - p.theta.sin()),
            p.y - r * (theta.cos() - p.theta.cos()),
        )
    };
    Pose { x, y, theta }
}

fn clearance(p: &Pose, solids: &[Segment]) -> f64 {
    let c = p.position();
    solids
        .iter()
        .map(|s| s.distance_to(c))
        .fold(f64::INFINITY, f64::min)
}

/// Integrates one control tick in `SUBSTEP` increments. On contact the robot
/// is backed off to the last collision-free point and stops for the rest
/// of the tick. Crossed doors are blocked and the stall state updated.
pub fn step(state: &mut RobotState, cmd: &MotorCommand, arena: &mut Arena, dt: f64) -> StepResult {
    let substeps = (dt / SUBSTEP).round().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut path = 0.0;
    let mut collided = false;
    let mut crossed = Vec::new();

    for _ in 0..substeps {
        let from = state.pose;
        // a freshly blocked door may already overlap the body; only forbid
        // getting closer than we are now
        let limit = state.radius.min(clearance(&from, arena.solids()));
        let mut to = advance(&from, cmd, h);
        if clearance(&to, arena.solids()) < limit {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..CONTACT_ITERS {
                let mid = 0.5 * (lo + hi);
                if clearance(&advance(&from, cmd, h * mid), arena.solids()) >= limit {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            to = advance(&from, cmd, h * lo);
            collided = true;
        }
        let moved = Segment::new(from.position(), to.position());
        for (i, door) in arena.map().doors.iter().enumerate() {
            if arena.is_blocked(i) {
                continue;
            }
            let s = &door.segment;
            if s.side(from.position()) > 0.0 && s.side(to.position()) <= 0.0 && moved.intersects(s)
            {
                crossed.push(i);
            }
        }
        for &i in &crossed {
            if arena.block_door(i) {
                state.passed_doors.insert(i);
            }
        }
        path += from.position().distance(to.position());
        state.pose = to;
        if collided {
            break;
        }
    }
    let distance_moved = if collided { 0.0 } else { path };

    if distance_moved < MOVE_EPSILON {
        state.stationary_ticks += 1;
    } else {
        state.stationary_ticks = 0;
    }
    let stalled = state.stationary_ticks >= STALL_TICKS;
    if stalled && !state.stalled {
        state.stall_events += 1;
    }
    state.stalled = stalled;

    StepResult {
        distance_moved,
        collided,
        crossed,
    }
}
