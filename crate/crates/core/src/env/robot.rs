use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::geometry::Point;
use super::heightmap::Heightmap;

/// Ground-contact pose of the robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotPose {
    pub x: f64,
    pub y: f64,
    /// Heading in (−π, π].
    pub psi: f64,
    pub z: f64,
    /// Positive when the left side is raised.
    pub roll: f64,
    /// Positive when the nose is raised.
    pub pitch: f64,
}

impl RobotPose {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Grounds a planar pose on the terrain: elevation by bilinear lookup, pitch
/// and roll from the terrain slope along and across the heading.
pub fn pose_from_terrain(hm: &Heightmap, x: f64, y: f64, psi: f64) -> RobotPose {
    let [gx, gy] = hm.gradient_at(x, y);
    let (s, c) = psi.sin_cos();
    RobotPose {
        x,
        y,
        psi: wrap_angle(psi),
        z: hm.elevation_at(x, y),
        pitch: (gx * c + gy * s).atan(),
        roll: (-gx * s + gy * c).atan(),
    }
}

/// Planar distance to the goal and signed bearing relative to the heading.
pub fn goal_geometry(pose: &RobotPose, goal: Point) -> (f64, f64) {
    let dx = goal.x - pose.x;
    let dy = goal.y - pose.y;
    (dx.hypot(dy), wrap_angle(dy.atan2(dx) - pose.psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn incline() -> Heightmap {
        // h = 0.5 x
        let (w, h) = (21, 21);
        let e = (0..h).flat_map(|_| (0..w).map(|i| 0.5 * i as f64)).collect();
        Heightmap::new(w, h, 1.0, [0.0, 0.0], e).unwrap()
    }

    #[test]
    fn flat_terrain_is_level() {
        let hm = Heightmap::flat(5, 5, 1.0, [0.0, 0.0]);
        let p = pose_from_terrain(&hm, 2.3, 1.7, 0.4);
        assert_eq!((p.roll, p.pitch, p.z), (0.0, 0.0, 0.0));
    }

    #[test]
    fn incline_along_heading_is_pitch() {
        let p = pose_from_terrain(&incline(), 10.0, 10.0, 0.0);
        assert_relative_eq!(p.pitch, 0.5f64.atan(), epsilon = 1e-12);
        assert_relative_eq!(p.pitch, 0.46365, epsilon = 1e-5);
        assert_relative_eq!(p.roll, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.z, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn incline_across_heading_is_roll() {
        let p = pose_from_terrain(&incline(), 10.0, 10.0, FRAC_PI_2);
        assert_relative_eq!(p.pitch, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.roll.abs(), 0.46365, epsilon = 1e-5);
    }

    #[test]
    fn goal_geometry_examples() {
        let origin = RobotPose::default();
        let (d, a) = goal_geometry(&origin, Point::new(3.0, 4.0));
        assert_relative_eq!(d, 5.0, epsilon = 1e-15);
        assert_relative_eq!(a, 0.92730, epsilon = 1e-5);
        assert_eq!(goal_geometry(&origin, Point::new(7.0, 0.0)), (7.0, 0.0));
        let (_, behind) = goal_geometry(&origin, Point::new(-2.0, 0.0));
        assert_eq!(behind.abs(), PI);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_relative_eq!(wrap_angle(-PI), PI);
        assert_relative_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2);
        assert_relative_eq!(wrap_angle(0.1 + 4.0 * TAU), 0.1, epsilon = 1e-12);
    }
}
