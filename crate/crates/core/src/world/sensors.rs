use std::f64::consts::PI;

use crate::geometry::{cast, wrap_angle, Segment, Vec2};
use crate::sensing::{laser_bearing, Blob, SensorSummary};

use super::{
    Arena, Pose, CAMERA_FOV, CAMERA_RANGE, LASER_OFFSET, LASER_RANGE, LASER_RAYS, MARKER_SIZE,
    ROBOT_RADIUS, SONAR_RANGE, SONAR_RAYS,
};

/// Laser ranges from the scanner on the front edge of the body, ray `k` at
/// bearing `laser_bearing(k, LASER_RAYS)` (clockwise, negative = left).
pub fn raycast_laser(pose: &Pose, arena: &Arena) -> Vec<f64> {
    let origin = pose.position() + Vec2::from_angle(pose.theta) * LASER_OFFSET;
    (0..LASER_RAYS)
        .map(|k| {
            let dir = Vec2::from_angle(pose.theta - laser_bearing(k, LASER_RAYS));
            cast(origin, dir, arena.solids(), LASER_RANGE)
        })
        .collect()
}

/// Heading-relative angles of the rear sonars: the centres of eight equal
/// sectors covering the rear half-plane.
pub fn sonar_angles() -> [f64; SONAR_RAYS] {
    let width = PI / SONAR_RAYS as f64;
    std::array::from_fn(|k| PI / 2.0 + width * (k as f64 + 0.5))
}

/// Rear sonar ranges, measured radially from transducers on the body edge.
pub fn sonar_rear(pose: &Pose, arena: &Arena) -> Vec<f64> {
    let centre = pose.position();
    sonar_angles()
        .iter()
        .map(|&a| {
            let dir = Vec2::from_angle(pose.theta + a);
            cast(
                centre + dir * ROBOT_RADIUS,
                dir,
                arena.solids(),
                SONAR_RANGE,
            )
        })
        .collect()
}

/// Nearest open-door marker inside the camera cone with a clear line of
/// sight.
pub fn camera_blob(pose: &Pose, arena: &Arena) -> Option<Blob> {
    let eye = pose.position();
    let mut best: Option<(f64, Blob)> = None;
    for marker in arena.open_markers() {
        let d = eye.distance(marker);
        if !(1e-9..=CAMERA_RANGE).contains(&d) {
            continue;
        }
        let rel = wrap_angle((marker.y - eye.y).atan2(marker.x - eye.x) - pose.theta);
        if rel.abs() > CAMERA_FOV / 2.0 {
            continue;
        }
        // stop just short of the marker so the door line itself never occludes
        let sight = Segment::new(eye, eye + (marker - eye) * (1.0 - 1e-6));
        if arena.solids().iter().any(|s| s.intersects(&sight)) {
            continue;
        }
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((
                d,
                Blob {
                    bearing: -rel,
                    area: (MARKER_SIZE / d).powi(2),
                },
            ));
        }
    }
    best.map(|(_, b)| b)
}

/// Full sensor summary for the current pose.
pub fn sense(
    pose: &Pose,
    arena: &Arena,
    distance_moved: f64,
    stationary_ticks: u32,
) -> SensorSummary {
    let laser = raycast_laser(pose, arena);
    let sonar = sonar_rear(pose, arena);
    SensorSummary::from_ranges(
        &laser,
        &sonar,
        camera_blob(pose, arena),
        distance_moved,
        stationary_ticks,
    )
}
