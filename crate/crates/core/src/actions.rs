//! Antibody behaviours and the motor commands they produce.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle;
use crate::sensing::SensorSummary;
use crate::N_ANTIBODIES;

/// Maximum permitted linear speed (m/s).
pub const MAX_SPEED: f64 = 2.0;
/// Turn-rate cap (rad/s).
pub const MAX_TURN: f64 = FRAC_PI_2;
/// Proportional steering gain for the variable behaviours (1/s).
pub const STEER_GAIN: f64 = 2.0;
/// Wander-min turns away harder the closer the nearest reading is inside
/// this range, and drives straight beyond it (m).
pub const AVOID_RANGE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Fixed,
    WanderMax,
    WanderMin,
    TrackBlobs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntibodyAction {
    pub id: usize,
    pub name: &'static str,
    /// Turn rate for fixed rows (deg/s, positive = left).
    pub angular_deg: f64,
    /// Linear speed (m/s).
    pub linear: f64,
    pub kind: ActionKind,
}

const fn fixed(id: usize, name: &'static str, angular_deg: f64, linear: f64) -> AntibodyAction {
    AntibodyAction {
        id,
        name,
        angular_deg,
        linear,
        kind: ActionKind::Fixed,
    }
}

const fn variable(id: usize, name: &'static str, linear: f64, kind: ActionKind) -> AntibodyAction {
    AntibodyAction {
        id,
        name,
        angular_deg: 0.0,
        linear,
        kind,
    }
}

pub const ACTIONS: [AntibodyAction; N_ANTIBODIES] = [
    fixed(0, "reverse spin 1", -90.0, -0.15),
    fixed(1, "slow right 15", -15.0, 0.06),
    fixed(2, "slow left 15", 15.0, 0.06),
    fixed(3, "fast centre", 0.0, MAX_SPEED / 2.0),
    fixed(4, "fast left 15", 15.0, MAX_SPEED / 2.0),
    fixed(5, "fast right 15", -15.0, MAX_SPEED / 2.0),
    fixed(6, "slow right 35", -35.0, 0.06),
    fixed(7, "slow left 35", 35.0, 0.06),
    fixed(8, "fast left 35", 35.0, MAX_SPEED / 2.0),
    fixed(9, "fast right 35", -35.0, MAX_SPEED / 2.0),
    fixed(10, "reverse spin 2", 90.0, -0.15),
    variable(11, "wander max", MAX_SPEED, ActionKind::WanderMax),
    variable(12, "wander min", MAX_SPEED / 2.0, ActionKind::WanderMin),
    variable(13, "track blobs", MAX_SPEED, ActionKind::TrackBlobs),
    fixed(14, "reverse 1", -25.0, -0.15),
    fixed(15, "reverse 2", 25.0, -0.15),
];

/// Linear (m/s) and angular (rad/s, positive = counter-clockwise = left)
/// velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorCommand {
    pub v: f64,
    pub w: f64,
}

/// Turn rate that steers toward a target at heading-relative angle
/// `error` (rad, positive = left).
pub fn steer(error: f64) -> f64 {
    (STEER_GAIN * error).clamp(-MAX_TURN, MAX_TURN)
}

/// Counter-clockwise angle that turns the robot to face directly away from
/// something at sensor bearing `bearing`. Dead-ahead turns left.
fn away_from(bearing: f64) -> f64 {
    // sensor bearings are clockwise: bearing b sits at ccw angle -b
    let toward = -bearing;
    let side = if toward > 0.0 { 1.0 } else { -1.0 };
    wrap_angle(toward - side * std::f64::consts::PI)
}

pub fn command_for(action: &AntibodyAction, s: &SensorSummary) -> MotorCommand {
    let w = match action.kind {
        ActionKind::Fixed => action.angular_deg.to_radians(),
        ActionKind::WanderMax => steer(-s.z_max_bearing),
        ActionKind::WanderMin => {
            let urgency = ((AVOID_RANGE - s.z_min) / AVOID_RANGE).clamp(0.0, 1.0);
            urgency * steer(away_from(s.z_min_bearing))
        }
        ActionKind::TrackBlobs => s.blob.map_or(0.0, |b| steer(-b.bearing)),
    };
    MotorCommand {
        v: action.linear,
        w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::Blob;

    fn summary() -> SensorSummary {
        SensorSummary {
            z_min: 1.0,
            z_av: 3.0,
            z_max: 8.0,
            r_min: 3,
            z_min_bearing: 0.3,
            z_max_bearing: -0.2,
            e_av: 5.0,
            blob: None,
            distance_moved: 0.5,
            stationary_ticks: 0,
        }
    }

    #[test]
    fn fixed_rows() {
        let c = command_for(&ACTIONS[3], &summary());
        assert_eq!((c.w, c.v), (0.0, 1.0));
        let c = command_for(&ACTIONS[0], &summary());
        assert!((c.w - (-90f64).to_radians()).abs() < 1e-15);
        assert_eq!(c.v, -0.15);
    }

    #[test]
    fn table_ids_are_positional() {
        for (i, a) in ACTIONS.iter().enumerate() {
            assert_eq!(a.id, i);
            assert!(a.linear.abs() <= MAX_SPEED);
            assert!(a.angular_deg.abs() <= 90.0);
        }
    }

    #[test]
    fn track_blob_dead_ahead() {
        let mut s = summary();
        s.blob = Some(Blob {
            bearing: 0.0,
            area: 1.0,
        });
        let c = command_for(&ACTIONS[13], &s);
        assert_eq!((c.w, c.v), (0.0, 2.0));
        s.blob = None;
        assert_eq!(command_for(&ACTIONS[13], &s).w, 0.0);
    }

    #[test]
    fn wander_max_turns_toward_open_side() {
        // z_max on the left (negative bearing) → turn left (positive w)
        let c = command_for(&ACTIONS[11], &summary());
        assert!((c.w - 0.4).abs() < 1e-12);
        assert_eq!(c.v, MAX_SPEED);
    }

    #[test]
    fn wander_min_turns_away() {
        // obstacle slightly right at half the avoid range → turn left at
        // half the saturated rate
        let c = command_for(&ACTIONS[12], &summary());
        assert!((c.w - 0.5 * MAX_TURN).abs() < 1e-12);
        assert_eq!(c.v, 1.0);
        let mut far = summary();
        far.z_min = AVOID_RANGE + 1.0;
        assert_eq!(command_for(&ACTIONS[12], &far).w, 0.0);
    }

    #[test]
    fn steering_is_odd_and_capped() {
        for e in [-3.0, -1.0, -0.3, 0.01, 0.5, 2.0] {
            assert_eq!(steer(-e), -steer(e));
            assert!(steer(e).abs() <= MAX_TURN);
        }
        for b in [-1.2f64, -0.4, 0.1, 0.9] {
            assert!((away_from(-b) + away_from(b)).abs() < 1e-12);
        }
    }
}
