//! Planar obstacle primitives and 2-D ray casting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCAN_BEAMS: usize = 720;
pub const SCAN_MAX_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn add_scaled(self, d: Point, t: f64) -> Point {
        Point::new(self.x + t * d.x, self.y + t * d.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

/// A circle (tree, boulder) or a thick line segment (wall). Thick segments are
/// capsules: every point within `thickness / 2` of the centre line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Obstacle {
    Circle { center: Point, radius: f64 },
    Segment { p1: Point, p2: Point, thickness: f64 },
}

impl Obstacle {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Obstacle::Circle { radius, .. } if !(radius > 0.0) => {
                Err(Error::config("obstacle.radius", "must be positive"))
            }
            Obstacle::Segment { thickness, .. } if !(thickness >= 0.0) => {
                Err(Error::config("obstacle.thickness", "must be non-negative"))
            }
            Obstacle::Segment { p1, p2, .. } if p1 == p2 => {
                Err(Error::config("obstacle.segment", "endpoints must be distinct"))
            }
            _ => Ok(()),
        }
    }

    /// Distance from `p` to the obstacle surface; non-positive inside.
    pub fn clearance(&self, p: Point) -> f64 {
        match *self {
            Obstacle::Circle { center, radius } => p.distance(center) - radius,
            Obstacle::Segment { p1, p2, thickness } => point_segment_distance(p, p1, p2) - thickness / 2.0,
        }
    }

    /// Distance along the unit direction `dir` from `origin` to the first hit.
    pub fn ray_distance(&self, origin: Point, dir: Point) -> Option<f64> {
        match *self {
            Obstacle::Circle { center, radius } => ray_circle(origin, dir, center, radius),
            Obstacle::Segment { p1, p2, thickness } if thickness > 0.0 => ray_capsule(origin, dir, p1, p2, thickness / 2.0),
            Obstacle::Segment { p1, p2, .. } => ray_segment(origin, dir, p1, p2),
        }
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a.add_scaled(ab, t))
}

pub fn ray_circle(origin: Point, dir: Point, center: Point, radius: f64) -> Option<f64> {
    let oc = center.sub(origin);
    let oc2 = oc.dot(oc);
    if oc2 <= radius * radius {
        return Some(0.0);
    }
    let tc = oc.dot(dir);
    if tc < 0.0 {
        return None;
    }
    let miss2 = oc2 - tc * tc;
    if miss2 > radius * radius {
        return None;
    }
    Some(tc - (radius * radius - miss2).sqrt())
}

pub fn ray_segment(origin: Point, dir: Point, a: Point, b: Point) -> Option<f64> {
    let e = b.sub(a);
    let denom = dir.cross(e);
    if denom.abs() < 1e-12 {
        return None;
    }
    let ao = a.sub(origin);
    let t = ao.cross(e) / denom;
    let s = ao.cross(dir) / denom;
    (t >= 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
}

fn ray_capsule(origin: Point, dir: Point, a: Point, b: Point, r: f64) -> Option<f64> {
    if point_segment_distance(origin, a, b) <= r {
        return Some(0.0);
    }
    let e = b.sub(a);
    let len = e.norm();
    let n = Point::new(-e.y / len * r, e.x / len * r);
    [
        ray_circle(origin, dir, a, r),
        ray_circle(origin, dir, b, r),
        ray_segment(origin, dir, a.add_scaled(n, 1.0), b.add_scaled(n, 1.0)),
        ray_segment(origin, dir, a.add_scaled(n, -1.0), b.add_scaled(n, -1.0)),
    ]
    .into_iter()
    .flatten()
    .reduce(f64::min)
}

/// Beam `i` points at `heading + i·(360°/SCAN_BEAMS)`, counter-clockwise.
pub fn beam_angle(i: usize) -> f64 {
    i as f64 * std::f64::consts::TAU / SCAN_BEAMS as f64
}

/// 360° range scan from `origin`; every entry lies in `[0, SCAN_MAX_RANGE]`.
pub fn scan(obstacles: &[Obstacle], origin: Point, heading: f64) -> Vec<f64> {
    let nearby: Vec<&Obstacle> = obstacles
        .iter()
        .filter(|o| o.clearance(origin) <= SCAN_MAX_RANGE)
        .collect();
    (0..SCAN_BEAMS)
        .map(|i| {
            let a = heading + beam_angle(i);
            let dir = Point::new(a.cos(), a.sin());
            nearby
                .iter()
                .filter_map(|o| o.ray_distance(origin, dir))
                .fold(SCAN_MAX_RANGE, f64::min)
                .clamp(0.0, SCAN_MAX_RANGE)
        })
        .collect()
}
