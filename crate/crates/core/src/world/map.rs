//! Maze description and its text format.
//!
//! ```text
//! # comment
//! wall x1 y1 x2 y2
//! obstacle n x1 y1 ... xn yn
//! door x1 y1 x2 y2 from to
//! start x y heading_deg
//! goal n x1 y1 ... xn yn
//! ```
//!
//! Units are metres. A door's `from` room lies to the left of the directed
//! segment (x1,y1)→(x2,y2), its `to` room to the right. The door marker sits
//! at the segment midpoint.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, polygon_edges, Segment, Vec2};
use crate::world::ROBOT_RADIUS;

pub const M1_SOURCE: &str = include_str!("../../data/m1.map");
pub const M2_SOURCE: &str = include_str!("../../data/m2.map");

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading (rad, counter-clockwise from +x).
    pub theta: f64,
}

impl Pose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub segment: Segment,
    pub marker: Vec2,
    pub room_from: u32,
    pub room_to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldMap {
    pub name: String,
    pub walls: Vec<Segment>,
    pub obstacles: Vec<Vec<Vec2>>,
    pub doors: Vec<Door>,
    pub start: Pose,
    pub goal: Vec<Vec2>,
}

impl WorldMap {
    /// One of the shipped worlds, `m1` or `m2`.
    pub fn builtin(id: &str) -> Result<Self> {
        match id.to_ascii_lowercase().as_str() {
            "m1" => Self::parse("m1", M1_SOURCE),
            "m2" => Self::parse("m2", M2_SOURCE),
            _ => Err(Error::UnknownWorld(id.to_string())),
        }
    }

    /// A shipped world id, or else a path to a map file.
    pub fn resolve(id_or_path: &str) -> Result<Self> {
        match Self::builtin(id_or_path) {
            Err(Error::UnknownWorld(_)) => {
                let path = Path::new(id_or_path);
                if !path.is_file() {
                    return Err(Error::UnknownWorld(id_or_path.to_string()));
                }
                Self::load(path)
            }
            other => other,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "map".into());
        Self::parse(&name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut walls = Vec::new();
        let mut obstacles = Vec::new();
        let mut doors = Vec::new();
        let mut start = None;
        let mut goal = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                what: "map",
                line: idx + 1,
                msg,
            };
            let mut tokens = line.split_whitespace();
            let keyword = tokens.next().unwrap_or_default();
            let nums: Vec<f64> = tokens
                .map(|t| t.parse::<f64>().map_err(|e| err(format!("`{t}`: {e}"))))
                .collect::<Result<_>>()?;
            let expect = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(err(format!(
                        "`{keyword}` takes {n} numbers, found {}",
                        nums.len()
                    )))
                }
            };
            match keyword {
                "wall" => {
                    expect(4)?;
                    walls.push(seg(&nums));
                }
                "door" => {
                    expect(6)?;
                    let segment = seg(&nums);
                    let (from, to) = (nums[4], nums[5]);
                    if from < 0.0 || to < 0.0 || from.fract() != 0.0 || to.fract() != 0.0 {
                        return Err(err("door rooms must be non-negative integers".into()));
                    }
                    doors.push(Door {
                        segment,
                        marker: segment.midpoint(),
                        room_from: from as u32,
                        room_to: to as u32,
                    });
                }
                "start" => {
                    expect(3)?;
                    if start.is_some() {
                        return Err(err("duplicate `start`".into()));
                    }
                    start = Some(Pose {
                        x: nums[0],
                        y: nums[1],
                        theta: nums[2].to_radians(),
                    });
                }
                "obstacle" | "goal" => {
                    let poly = polygon(&nums).map_err(err)?;
                    if keyword == "goal" {
                        if goal.is_some() {
                            return Err(err("duplicate `goal`".into()));
                        }
                        goal = Some(poly);
                    } else {
                        obstacles.push(poly);
                    }
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse {
            what: "map",
            line: text.lines().count(),
            msg: format!("missing `{what}`"),
        };
        Ok(WorldMap {
            name: name.to_string(),
            walls,
            obstacles,
            doors,
            start: start.ok_or_else(|| missing("start"))?,
            goal: goal.ok_or_else(|| missing("goal"))?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for w in &self.walls {
            let _ = writeln!(out, "wall {} {} {} {}", w.a.x, w.a.y, w.b.x, w.b.y);
        }
        for o in &self.obstacles {
            let _ = writeln!(out, "obstacle {}", poly_text(o));
        }
        for d in &self.doors {
            let s = d.segment;
            let _ = writeln!(
                out,
                "door {} {} {} {} {} {}",
                s.a.x, s.a.y, s.b.x, s.b.y, d.room_from, d.room_to
            );
        }
        let _ = writeln!(
            out,
            "start {} {} {}",
            self.start.x,
            self.start.y,
            self.start.theta.to_degrees()
        );
        let _ = writeln!(out, "goal {}", poly_text(&self.goal));
        out
    }

    /// Walls plus obstacle outlines; doors excluded.
    pub fn static_segments(&self) -> Vec<Segment> {
        let mut segs = self.walls.clone();
        for o in &self.obstacles {
            segs.extend(polygon_edges(o));
        }
        segs
    }

    pub fn in_goal(&self, p: Vec2) -> bool {
        point_in_polygon(p, &self.goal)
    }

    /// True when a robot disc of `radius` at `p` touches nothing solid.
    pub fn is_free(&self, p: Vec2, radius: f64, solids: &[Segment]) -> bool {
        solids.iter().all(|s| s.distance_to(p) >= radius)
            && !self.obstacles.iter().any(|o| point_in_polygon(p, o))
    }

    /// Structural checks: collision-free start, sane doors and goal, and a
    /// path for the robot from start to goal with every door open.
    pub fn validate(&self) -> Result<MapReport> {
        let bad = |msg: String| Error::Config(format!("map `{}`: {msg}", self.name));
        if self.goal.len() < 3 {
            return Err(bad("goal polygon needs at least 3 vertices".into()));
        }
        for (i, d) in self.doors.iter().enumerate() {
            if d.room_from == d.room_to {
                return Err(bad(format!(
                    "door {i} joins room {} to itself",
                    d.room_from
                )));
            }
            if d.segment.length() < 2.0 * ROBOT_RADIUS {
                return Err(bad(format!("door {i} is narrower than the robot")));
            }
        }
        let solids = self.static_segments();
        if !self.is_free(self.start.position(), ROBOT_RADIUS, &solids) {
            return Err(bad("start pose collides with the map".into()));
        }
        if self.in_goal(self.start.position()) {
            return Err(bad("start pose is already inside the goal".into()));
        }
        let cells = self.reachable_cells(&solids, 0.1);
        let reachable = cells.iter().any(|&p| self.in_goal(p));
        if !reachable {
            return Err(bad("goal is unreachable from the start".into()));
        }
        Ok(MapReport {
            walls: self.walls.len(),
            obstacles: self.obstacles.len(),
            doors: self.doors.len(),
            reachable_cells: cells.len(),
        })
    }

    /// Flood fill over a grid of free robot positions.
    fn reachable_cells(&self, solids: &[Segment], cell: f64) -> Vec<Vec2> {
        let pts = solids.iter().flat_map(|s| [s.a, s.b]);
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts.chain(std::iter::once(self.start.position())) {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let nx = ((x1 - x0) / cell).ceil() as i64 + 1;
        let ny = ((y1 - y0) / cell).ceil() as i64 + 1;
        let origin = self.start.position();
        let at = |i: i64, j: i64| Vec2::new(origin.x + i as f64 * cell, origin.y + j as f64 * cell);
        let in_bounds = |p: Vec2| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
        let mut seen = std::collections::HashSet::new();
        let mut queue = VecDeque::from([(0i64, 0i64)]);
        let mut out = Vec::new();
        seen.insert((0, 0));
        while let Some((i, j)) = queue.pop_front() {
            out.push(at(i, j));
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni.abs() > nx || nj.abs() > ny || seen.contains(&(ni, nj)) {
                    continue;
                }
                let p = at(ni, nj);
                let step = Segment::new(at(i, j), p);
                if in_bounds(p)
                    && self.is_free(p, ROBOT_RADIUS, solids)
                    && !solids.iter().any(|s| s.intersects(&step))
                {
                    seen.insert((ni, nj));
                    queue.push_back((ni, nj));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MapReport {
    pub walls: usize,
    pub obstacles: usize,
    pub doors: usize,
    pub reachable_cells: usize,
}

fn seg(n: &[f64]) -> Segment {
    Segment::new(Vec2::new(n[0], n[1]), Vec2::new(n[2], n[3]))
}

fn polygon(nums: &[f64]) -> std::result::Result<Vec<Vec2>, String> {
    let Some((&count, coords)) = nums.split_first() else {
        return Err("polygon needs a vertex count".into());
    };
    if count.fract() != 0.0 || count < 3.0 {
        return Err(format!(
            "polygon vertex count must be an integer >= 3, got {count}"
        ));
    }
    let n = count as usize;
    if coords.len() != 2 * n {
        return Err(format!(
            "polygon declares {n} vertices but has {} numbers",
            coords.len()
        ));
    }
    Ok(coords.chunks(2).map(|c| Vec2::new(c[0], c[1])).collect())
}

fn poly_text(poly: &[Vec2]) -> String {
    let mut s = poly.len().to_string();
    for p in poly {
        let _ = write!(s, " {} {}", p.x, p.y);
    }
    s
}
