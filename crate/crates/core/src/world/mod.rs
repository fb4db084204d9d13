//! Deterministic 2D maze simulator.

mod episode;
mod map;
mod robot;
mod sensors;

pub use episode::{
    run_episode, start_pose, trace_from_csv, trace_to_csv, Episode, EpisodeConfig, MotionNoise,
    RunRecord, TickTrace,
};
pub use map::{Door, MapReport, Pose, WorldMap, M1_SOURCE, M2_SOURCE};
pub use robot::{step, RobotState, StepResult};
pub use sensors::{camera_blob, raycast_laser, sense, sonar_rear};

use crate::geometry::Segment;

pub const ROBOT_RADIUS: f64 = 0.25;
pub const LASER_RAYS: usize = 181;
pub const LASER_RANGE: f64 = 8.0;
/// Forward offset of the laser from the body centre (m).
pub const LASER_OFFSET: f64 = ROBOT_RADIUS;
pub const SONAR_RAYS: usize = 8;
pub const SONAR_RANGE: f64 = 5.0;
/// Full horizontal field of view of the camera (rad).
pub const CAMERA_FOV: f64 = std::f64::consts::PI / 3.0;
pub const CAMERA_RANGE: f64 = 6.0;
/// Edge length of a door marker (m); sets the apparent blob area.
pub const MARKER_SIZE: f64 = 0.3;
/// Integration substep inside one control tick (s).
pub const SUBSTEP: f64 = 0.05;
/// Largest per-axis offset applied to the start position of a run (m).
/// Default actuation noise: relative speed error and turn-rate error (rad/s).
pub const SPEED_NOISE: f64 = 0.1;
pub const TURN_NOISE: f64 = 0.1;
pub const START_JITTER: f64 = 0.2;
/// Largest start heading offset (rad).
pub const START_JITTER_HEADING: f64 = std::f64::consts::PI / 12.0;
/// Default episode timeout (simulated s).
pub const DEFAULT_MAX_TIME: f64 = 1800.0;

/// Mutable view of a map during an episode: the solid segments, which
/// grow as doors are blocked behind the robot.
#[derive(Debug, Clone)]
pub struct Arena<'m> {
    map: &'m WorldMap,
    solids: Vec<Segment>,
    door_blocked: Vec<bool>,
}

impl<'m> Arena<'m> {
    pub fn new(map: &'m WorldMap) -> Self {
        Arena {
            map,
            solids: map.static_segments(),
            door_blocked: vec![false; map.doors.len()],
        }
    }

    pub fn map(&self) -> &'m WorldMap {
        self.map
    }

    pub fn solids(&self) -> &[Segment] {
        &self.solids
    }

    pub fn is_blocked(&self, door: usize) -> bool {
        self.door_blocked[door]
    }

    /// Markers of doors that are still open.
    pub fn open_markers(&self) -> impl Iterator<Item = crate::geometry::Vec2> + '_ {
        self.map
            .doors
            .iter()
            .zip(&self.door_blocked)
            .filter(|(_, &blocked)| !blocked)
            .map(|(d, _)| d.marker)
    }

    /// Turns a door into solid wall and removes its marker. Returns false if
    /// it was already blocked.
    pub fn block_door(&mut self, door: usize) -> bool {
        if self.door_blocked[door] {
            return false;
        }
        self.door_blocked[door] = true;
        self.solids.push(self.map.doors[door].segment);
        true
    }
}
