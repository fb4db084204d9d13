//! Reinforcement scoring of the executed antibody.
//!
//! After each half-second action the new sensor summary is compared with the
//! one the action was chosen from, and the paratope entry of the executed
//! antibody for the dominant antigen is nudged by the resulting score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::immune::ParatopeMatrix;
use crate::sensing::{
    detect_antigens, SensorSummary, CONFINED, MARKER_SEEN, MOVE_EPSILON, OBJECT_CENTRE,
    OBJECT_LEFT, OBJECT_RIGHT, OPEN_SPACE,
};

/// Distance per tick that counts as progress in open space (m).
pub const PROGRESS_DISTANCE: f64 = 0.25;
/// Distance per tick below which open-space behaviour is judged idle (m).
pub const IDLE_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub r_success: f64,
    pub r_failure: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            r_success: 0.05,
            r_failure: 0.05,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_success > 0.0) || !(self.r_failure > 0.0) {
            return Err(Error::Config(format!(
                "reward magnitudes must be > 0, got r_success={} r_failure={}",
                self.r_success, self.r_failure
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlOutcome {
    pub tau: f64,
    pub success: bool,
}

impl RlOutcome {
    fn scored(tau: f64) -> Self {
        RlOutcome {
            tau,
            success: tau >= 0.0,
        }
    }

    /// Outcome assumed before any action has been scored.
    pub fn neutral() -> Self {
        Self::scored(0.0)
    }
}

/// Scores the action taken between two consecutive summaries.
///
/// A stall or a collision (no movement during the action) is always a
/// failure. Otherwise the rule depends
/// on the antigen the action was chosen for:
/// - obstacle, confinement and stall antigens: success if the condition
///   cleared or the most urgent presenting priority dropped; failure if the
///   nearest laser reading shrank (obstacle and confinement only);
/// - open space: success for progress, failure for idling or for
///   running into a more urgent condition;
/// - marker seen: success if the marker is still seen and is better centred
///   or closer.
///
/// Anything else is neutral (`tau = 0`), which counts as success.
pub fn evaluate(
    before: &SensorSummary,
    after: &SensorSummary,
    dominant_before: usize,
    cfg: &RewardConfig,
) -> RlOutcome {
    let win = RlOutcome::scored(cfg.r_success);
    let lose = RlOutcome::scored(-cfg.r_failure);
    let prev = detect_antigens(before);
    let next = detect_antigens(after);

    if next.has_stall() || after.distance_moved < MOVE_EPSILON {
        return lose;
    }

    match dominant_before {
        OPEN_SPACE => {
            if next.max_priority() > prev.max_priority() {
                lose
            } else if after.distance_moved >= PROGRESS_DISTANCE {
                win
            } else if after.distance_moved < IDLE_DISTANCE {
                lose
            } else {
                RlOutcome::neutral()
            }
        }
        MARKER_SEEN => match (before.blob, after.blob) {
            (Some(b0), Some(b1)) if b1.bearing.abs() < b0.bearing.abs() || b1.area > b0.area => win,
            _ => RlOutcome::neutral(),
        },
        d => {
            let cleared = !next.contains(d);
            let calmer = match (prev.max_priority(), next.max_priority()) {
                (Some(p0), Some(p1)) => p1 < p0,
                _ => false,
            };
            if cleared || calmer {
                win
            } else if matches!(d, OBJECT_LEFT | OBJECT_CENTRE | OBJECT_RIGHT | CONFINED)
                && after.z_min < before.z_min
            {
                lose
            } else {
                RlOutcome::neutral()
            }
        }
    }
}

/// Adds `tau` to one paratope entry, keeping it within `[0, 1]`.
pub fn apply(p: &mut ParatopeMatrix, antibody: usize, dominant: usize, tau: f64) {
    let v = (p.get(antibody, dominant) + tau).max(0.0);
    p.set(antibody, dominant, v);
}
