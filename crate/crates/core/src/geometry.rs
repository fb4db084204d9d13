//! Planar primitives used by the simulator: points, segments, ray casts and
//! polygon containment.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `angle` (radians, counter-clockwise from +x).
    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        p.distance(self.a + d * t)
    }

    /// Which side of the directed line a→b the point lies on: positive is
    /// left, negative right, zero on the line.
    pub fn side(&self, p: Vec2) -> f64 {
        (self.b - self.a).cross(p - self.a)
    }

    /// Proper or touching intersection test between two closed segments.
    pub fn intersects(&self, other: &Segment) -> bool {
        self.intersection_params(other).is_some()
    }

    /// Parameters `(t, u)` in `[0,1]²` with `self.a + t·(self.b−self.a) ==
    /// other.a + u·(other.b−other.a)`. Collinear overlaps are not reported.
    pub fn intersection_params(&self, other: &Segment) -> Option<(f64, f64)> {
        let r = self.b - self.a;
        let s = other.b - other.a;
        let denom = r.cross(s);
        if denom.abs() < PARALLEL_EPS {
            return None;
        }
        let qp = other.a - self.a;
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            Some((t, u))
        } else {
            None
        }
    }
}

/// Distance along the ray `origin + t·dir` (`dir` unit length) to `seg`, if
/// the ray hits it at `t ≥ 0`.
pub fn ray_segment(origin: Vec2, dir: Vec2, seg: &Segment) -> Option<f64> {
    let s = seg.b - seg.a;
    let denom = dir.cross(s);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let qp = seg.a - origin;
    let t = qp.cross(s) / denom;
    let u = qp.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Nearest hit of a ray against a set of segments, capped at `max_range`.
pub fn cast<'a, I>(origin: Vec2, dir: Vec2, segments: I, max_range: f64) -> f64
where
    I: IntoIterator<Item = &'a Segment>,
{
    segments
        .into_iter()
        .filter_map(|s| ray_segment(origin, dir, s))
        .fold(max_range, f64::min)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = (pj.x - pi.x) * (p.y - pi.y) / (pj.y - pi.y) + pi.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closed edge loop of a polygon.
pub fn polygon_edges(poly: &[Vec2]) -> impl Iterator<Item = Segment> + '_ {
    (0..poly.len()).map(move |i| Segment::new(poly[i], poly[(i + 1) % poly.len()]))
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
