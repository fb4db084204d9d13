//! Sensor metrics and antigen detection.
//!
//! Bearings in this module are relative to the robot heading and measured
//! clockwise: negative bearings are to the robot's left, positive to its
//! right. Laser subsectors 1 and 2 therefore cover the left, 3 and 4 the
//! centre, 5 and 6 the right.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::N_ANTIGENS;

pub const OBJECT_LEFT: usize = 0;
pub const OBJECT_CENTRE: usize = 1;
pub const OBJECT_RIGHT: usize = 2;
pub const OPEN_SPACE: usize = 3;
pub const CONFINED: usize = 4;
pub const STALLED: usize = 5;
pub const BLOCKED_BEHIND: usize = 6;
pub const MARKER_SEEN: usize = 7;

/// Urgency rank of each antigen, higher is more urgent.
pub const PRIORITY: [u8; N_ANTIGENS] = [2, 2, 2, 0, 3, 4, 5, 1];

pub const ANTIGEN_NAMES: [&str; N_ANTIGENS] = [
    "object left",
    "object centre",
    "object right",
    "open space",
    "confined",
    "stalled",
    "blocked behind",
    "marker seen",
];

/// Laser distance below which a nearby object antigen is raised (m).
pub const OBJECT_RANGE: f64 = 0.55;
/// Average laser threshold separating open space from confinement (m).
pub const Z_AV_THRESHOLD: f64 = 0.45;
/// Rear sonar average below which a stalled robot is blocked behind (m).
pub const REAR_THRESHOLD: f64 = 0.35;
/// Per-tick movement below which the robot counts as standing still (m).
pub const MOVE_EPSILON: f64 = 1e-4;
/// Consecutive stand-still ticks needed before the stall antigen is raised.
/// A tick cut short by contact reports no movement, so one such tick is
/// enough: the robot is then still standing when the next tick begins.
pub const STALL_TICKS: u32 = 1;

/// A set of antigen indices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct AntigenSet(u8);

impl AntigenSet {
    pub const fn empty() -> Self {
        AntigenSet(0)
    }

    pub fn insert(&mut self, antigen: usize) {
        assert!(antigen < N_ANTIGENS, "antigen index {antigen} out of range");
        self.0 |= 1 << antigen;
    }

    pub fn remove(&mut self, antigen: usize) {
        if antigen < N_ANTIGENS {
            self.0 &= !(1 << antigen);
        }
    }

    pub fn contains(&self, antigen: usize) -> bool {
        antigen < N_ANTIGENS && self.0 & (1 << antigen) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..N_ANTIGENS).filter(|&a| self.contains(a))
    }

    pub fn bits(&self) -> u8 {
        self.0
    }

    /// True when the stall (5) or blocked-behind (6) antigen is present.
    pub fn has_stall(&self) -> bool {
        self.contains(STALLED) || self.contains(BLOCKED_BEHIND)
    }

    /// Highest priority rank among the presenting antigens.
    pub fn max_priority(&self) -> Option<u8> {
        self.iter().map(|a| PRIORITY[a]).max()
    }
}

impl FromIterator<usize> for AntigenSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut s = AntigenSet::empty();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl From<AntigenSet> for Vec<usize> {
    fn from(s: AntigenSet) -> Self {
        s.iter().collect()
    }
}

impl TryFrom<Vec<usize>> for AntigenSet {
    type Error = String;
    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        if let Some(bad) = v.iter().find(|&&a| a >= N_ANTIGENS) {
            return Err(format!("antigen index {bad} out of range"));
        }
        Ok(v.into_iter().collect())
    }
}

impl fmt::Debug for AntigenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Space-separated antigen list, e.g. `1 3 7`.
impl fmt::Display for AntigenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for a in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
            first = false;
        }
        Ok(())
    }
}

/// A cyan marker sighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    /// Bearing of the marker centre (rad, negative = left).
    pub bearing: f64,
    /// Apparent size, proportional to the inverse square of range.
    pub area: f64,
}

/// Per-tick sensor metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSummary {
    pub z_min: f64,
    pub z_av: f64,
    pub z_max: f64,
    /// Laser subsector (1..=6) holding the minimum reading.
    pub r_min: u8,
    pub z_min_bearing: f64,
    pub z_max_bearing: f64,
    /// Mean of the rear sonar ranges.
    pub e_av: f64,
    pub blob: Option<Blob>,
    /// Distance travelled during the last tick (m).
    pub distance_moved: f64,
    /// Consecutive ticks, including this one, spent standing still.
    pub stationary_ticks: u32,
}

impl SensorSummary {
    /// Builds the summary from raw laser and sonar ranges.
    ///
    /// `laser[k]` is the range at bearing `laser_bearing(k, laser.len())`.
    /// Minimum and maximum ties resolve to the lowest ray index.
    pub fn from_ranges(
        laser: &[f64],
        sonar: &[f64],
        blob: Option<Blob>,
        distance_moved: f64,
        stationary_ticks: u32,
    ) -> Self {
        assert!(!laser.is_empty(), "laser scan must not be empty");
        let mut i_min = 0;
        let mut i_max = 0;
        for (i, &r) in laser.iter().enumerate() {
            if r < laser[i_min] {
                i_min = i;
            }
            if r > laser[i_max] {
                i_max = i;
            }
        }
        let z_av = laser.iter().sum::<f64>() / laser.len() as f64;
        let e_av = if sonar.is_empty() {
            0.0
        } else {
            sonar.iter().sum::<f64>() / sonar.len() as f64
        };
        let z_min_bearing = laser_bearing(i_min, laser.len());
        SensorSummary {
            z_min: laser[i_min],
            z_av,
            z_max: laser[i_max],
            r_min: subsector(z_min_bearing),
            z_min_bearing,
            z_max_bearing: laser_bearing(i_max, laser.len()),
            e_av,
            blob,
            distance_moved,
            stationary_ticks,
        }
    }
}

/// Bearing of ray `k` of an `n`-ray scan spread evenly over [−90°, +90°].
pub fn laser_bearing(k: usize, n: usize) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    if n <= 1 {
        return 0.0;
    }
    -FRAC_PI_2 + std::f64::consts::PI * k as f64 / (n - 1) as f64
}

/// Maps a bearing to its 30° laser subsector, 1 (far left) to 6 (far right).
pub fn subsector(bearing: f64) -> u8 {
    let deg = bearing.to_degrees();
    let idx = ((deg + 90.0) / 30.0).floor() as i64;
    (idx.clamp(0, 5) + 1) as u8
}

/// Antigens presented by a sensor summary.
pub fn detect_antigens(s: &SensorSummary) -> AntigenSet {
    let mut set = AntigenSet::empty();
    if s.z_min < OBJECT_RANGE {
        set.insert(match s.r_min {
            1 | 2 => OBJECT_LEFT,
            3 | 4 => OBJECT_CENTRE,
            _ => OBJECT_RIGHT,
        });
    }
    if s.z_av >= Z_AV_THRESHOLD {
        set.insert(OPEN_SPACE);
    } else {
        set.insert(CONFINED);
    }
    if s.stationary_ticks >= STALL_TICKS {
        set.insert(STALLED);
        if s.e_av < REAR_THRESHOLD {
            set.insert(BLOCKED_BEHIND);
        }
    }
    if s.blob.is_some() {
        set.insert(MARKER_SEEN);
    }
    set
}

/// The most urgent presenting antigen; equal ranks go to the lowest index.
/// `None` for an empty set.
pub fn dominant_of(presenting: AntigenSet) -> Option<usize> {
    // iter() is ascending, so a strict comparison keeps the lowest index
    let mut best: Option<usize> = None;
    for a in presenting.iter() {
        if best.is_none_or(|b| PRIORITY[a] > PRIORITY[b]) {
            best = Some(a);
        }
    }
    best
}
