use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::geometry::{Obstacle, Point};
use super::heightmap::Heightmap;
use crate::error::{Error, Result};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    GoalReaching,
    ObstacleAvoidance,
    UnevenTerrain,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::GoalReaching => "goal_reaching",
            Scenario::ObstacleAvoidance => "obstacle_avoidance",
            Scenario::UnevenTerrain => "uneven_terrain",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "goal_reaching" | "1" => Ok(Scenario::GoalReaching),
            "obstacle_avoidance" | "2" => Ok(Scenario::ObstacleAvoidance),
            "uneven_terrain" | "3" => Ok(Scenario::UnevenTerrain),
            other => Err(Error::config("scenario", format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    pub fn square(size: f64) -> Self {
        Self {
            min: Point::new(0.0, 0.0),
            max: Point::new(size, size),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(self.min.x, self.max.x), p.y.clamp(self.min.y, self.max.y))
    }

    /// Boundary as four zero-thickness walls.
    pub fn walls(&self) -> [Obstacle; 4] {
        let (a, b) = (self.min, self.max);
        let c = [a, Point::new(b.x, a.y), b, Point::new(a.x, b.y)];
        std::array::from_fn(|i| Obstacle::Segment {
            p1: c[i],
            p2: c[(i + 1) % 4],
            thickness: 0.0,
        })
    }
}

/// Procedural generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationKnobs {
    pub size: f64,
    pub cell_size: f64,
    pub min_separation: f64,
    pub max_separation: f64,
    /// Minimum distance from start and goal to any obstacle surface.
    pub clearance: f64,
    /// Minimum distance from start and goal to the region boundary.
    pub boundary_margin: f64,
    pub n_trees: usize,
    pub tree_radius: [f64; 2],
    pub n_walls: usize,
    pub wall_length: [f64; 2],
    pub wall_thickness: [f64; 2],
    /// Steep mounds, represented as large circles the scanner can see.
    pub n_mounds: usize,
    pub mound_radius: [f64; 2],
    /// Share of obstacles and hills placed near the start–goal line.
    pub corridor_fraction: f64,
    pub corridor_width: f64,
    pub n_hills: usize,
    pub hill_sigma: [f64; 2],
    pub hill_height: [f64; 2],
    pub max_elevation_gain: f64,
    /// Elevation range of the gently rolling goal-reaching terrain.
    pub flat_relief: f64,
    pub n_flat_hills: usize,
    pub flat_hill_sigma: [f64; 2],
    /// Maximum terrain slope at the start and goal positions.
    pub max_endpoint_slope: f64,
    pub max_retries: usize,
}

impl Default for GenerationKnobs {
    fn default() -> Self {
        Self {
            size: 100.0,
            cell_size: 1.0,
            min_separation: 10.0,
            max_separation: 40.0,
            clearance: 2.0,
            boundary_margin: 2.0,
            n_trees: 30,
            tree_radius: [0.2, 0.6],
            n_walls: 8,
            wall_length: [3.0, 10.0],
            wall_thickness: [0.2, 0.5],
            n_mounds: 4,
            mound_radius: [1.5, 3.0],
            corridor_fraction: 0.5,
            corridor_width: 8.0,
            n_hills: 16,
            hill_sigma: [2.0, 8.0],
            hill_height: [1.0, 4.0],
            max_elevation_gain: 4.0,
            flat_relief: 0.3,
            n_flat_hills: 6,
            flat_hill_sigma: [10.0, 25.0],
            max_endpoint_slope: 0.5,
            max_retries: 1000,
        }
    }
}

impl GenerationKnobs {
    pub fn validate(&self) -> Result<()> {
        if !(self.size > 0.0 && self.cell_size > 0.0 && self.cell_size <= self.size) {
            return Err(Error::config("generation.size", "size and cell_size must be positive"));
        }
        if !(self.min_separation > 0.0 && self.max_separation >= self.min_separation) {
            return Err(Error::config("generation.min_separation", "need 0 < min_separation <= max_separation"));
        }
        if !(self.max_elevation_gain > 0.0 && self.flat_relief >= 0.0) {
            return Err(Error::config("generation.max_elevation_gain", "must be positive"));
        }
        for (name, [lo, hi]) in [
            ("generation.tree_radius", self.tree_radius),
            ("generation.wall_length", self.wall_length),
            ("generation.mound_radius", self.mound_radius),
            ("generation.hill_sigma", self.hill_sigma),
            ("generation.hill_height", self.hill_height),
            ("generation.flat_hill_sigma", self.flat_hill_sigma),
        ] {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::config(name, "need 0 < low <= high"));
            }
        }
        if !(self.wall_thickness[0] >= 0.0 && self.wall_thickness[1] >= self.wall_thickness[0]) {
            return Err(Error::config("generation.wall_thickness", "need 0 <= low <= high"));
        }
        if !(0.0..=1.0).contains(&self.corridor_fraction) {
            return Err(Error::config("generation.corridor_fraction", "must lie in [0, 1]"));
        }
        if self.max_retries == 0 {
            return Err(Error::config("generation.max_retries", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub scenario: Scenario,
    pub seed: u64,
    pub knobs: GenerationKnobs,
    pub bounds: Bounds,
    pub start: StartPose,
    pub goal: Point,
    pub obstacles: Vec<Obstacle>,
    pub heightmap: Heightmap,
}

fn uniform(rng: &mut Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

struct Generator<'a> {
    knobs: &'a GenerationKnobs,
    bounds: Bounds,
    rng: Rng,
}

impl Generator<'_> {
    fn inner_bounds(&self) -> Bounds {
        let m = self.knobs.boundary_margin;
        Bounds {
            min: Point::new(self.bounds.min.x + m, self.bounds.min.y + m),
            max: Point::new(self.bounds.max.x - m, self.bounds.max.y - m),
        }
    }

    fn start_goal(&mut self) -> Result<(StartPose, Point)> {
        let inner = self.inner_bounds();
        if inner.max.x <= inner.min.x || inner.max.y <= inner.min.y {
            return Err(Error::Generation("boundary margin leaves no free space".into()));
        }
        for _ in 0..self.knobs.max_retries {
            let x = self.rng.random_range(inner.min.x..inner.max.x);
            let y = self.rng.random_range(inner.min.y..inner.max.y);
            let dir = self.rng.random_range(-PI..PI);
            let sep = uniform(&mut self.rng, [self.knobs.min_separation, self.knobs.max_separation]);
            let goal = Point::new(x + sep * dir.cos(), y + sep * dir.sin());
            let psi = self.rng.random_range(-PI..PI);
            if inner.contains(goal) {
                return Ok((StartPose { x, y, psi }, goal));
            }
        }
        Err(Error::Generation(format!(
            "no start/goal pair {}..{} m apart fits inside the region",
            self.knobs.min_separation, self.knobs.max_separation
        )))
    }

    /// Uniform over the region, or near the start–goal line.
    fn placement(&mut self, start: Point, goal: Point) -> Point {
        if self.rng.random_bool(self.knobs.corridor_fraction) {
            let t = self.rng.random_range(0.15..0.85);
            let lateral = self.rng.random_range(-self.knobs.corridor_width..=self.knobs.corridor_width);
            let (dx, dy) = (goal.x - start.x, goal.y - start.y);
            let len = dx.hypot(dy).max(f64::EPSILON);
            Point::new(
                start.x + t * dx - lateral * dy / len,
                start.y + t * dy + lateral * dx / len,
            )
        } else {
            Point::new(
                self.rng.random_range(self.bounds.min.x..self.bounds.max.x),
                self.rng.random_range(self.bounds.min.y..self.bounds.max.y),
            )
        }
    }

    fn obstacle(&mut self, kind: usize, start: Point, goal: Point) -> Result<Obstacle> {
        let k = self.knobs;
        for _ in 0..k.max_retries {
            let c = self.placement(start, goal);
            let candidate = match kind {
                0 => Obstacle::Circle {
                    center: c,
                    radius: uniform(&mut self.rng, k.tree_radius),
                },
                1 => {
                    let len = uniform(&mut self.rng, k.wall_length);
                    let a = self.rng.random_range(0.0..PI);
                    let (s, co) = a.sin_cos();
                    Obstacle::Segment {
                        p1: Point::new(c.x - 0.5 * len * co, c.y - 0.5 * len * s),
                        p2: Point::new(c.x + 0.5 * len * co, c.y + 0.5 * len * s),
                        thickness: uniform(&mut self.rng, k.wall_thickness),
                    }
                }
                _ => Obstacle::Circle {
                    center: c,
                    radius: uniform(&mut self.rng, k.mound_radius),
                },
            };
            if self.bounds.contains(c)
                && candidate.clearance(start) >= k.clearance
                && candidate.clearance(goal) >= k.clearance
            {
                return Ok(candidate);
            }
        }
        Err(Error::Generation(format!(
            "could not place an obstacle with {} m clearance after {} attempts",
            k.clearance, k.max_retries
        )))
    }

    fn grid(&self) -> (usize, usize) {
        let nx = ((self.bounds.max.x - self.bounds.min.x) / self.knobs.cell_size).round() as usize + 1;
        let ny = ((self.bounds.max.y - self.bounds.min.y) / self.knobs.cell_size).round() as usize + 1;
        (nx, ny)
    }

    /// Sum of Gaussian hills, shifted to a zero minimum and scaled so the
    /// elevation range does not exceed `max_range`.
    fn hills(&mut self, n: usize, sigma: [f64; 2], height: [f64; 2], max_range: f64, corridor: Option<(Point, Point)>) -> Heightmap {
        let hills: Vec<(Point, f64, f64)> = (0..n)
            .map(|_| {
                let c = match corridor {
                    Some((s, g)) => self.placement(s, g),
                    None => Point::new(
                        self.rng.random_range(self.bounds.min.x..self.bounds.max.x),
                        self.rng.random_range(self.bounds.min.y..self.bounds.max.y),
                    ),
                };
                (c, uniform(&mut self.rng, sigma), uniform(&mut self.rng, height))
            })
            .collect();
        let (nx, ny) = self.grid();
        let mut hm = Heightmap::flat(nx, ny, self.knobs.cell_size, [self.bounds.min.x, self.bounds.min.y]);
        for j in 0..ny {
            for i in 0..nx {
                let [x, y] = hm.node_position(i, j);
                hm.elevations[j * nx + i] = hills
                    .iter()
                    .map(|(c, s, h)| {
                        let d2 = (x - c.x).powi(2) + (y - c.y).powi(2);
                        h * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum();
            }
        }
        let (lo, hi) = hm.min_max();
        let scale = if hi - lo > max_range && hi > lo { max_range / (hi - lo) } else { 1.0 };
        for e in &mut hm.elevations {
            *e = (*e - lo) * scale;
        }
        hm
    }

    fn gentle_at(&self, hm: &Heightmap, p: Point) -> bool {
        let [gx, gy] = hm.gradient_at(p.x, p.y);
        gx.hypot(gy) <= self.knobs.max_endpoint_slope
    }
}

/// Builds the world for `(scenario, seed)`; identical inputs give identical worlds.
pub fn generate_world(scenario: Scenario, seed: u64, knobs: &GenerationKnobs) -> Result<World> {
    knobs.validate()?;
    let mut gen = Generator {
        knobs,
        bounds: Bounds::square(knobs.size),
        rng: seeded(seed),
    };
    let (start, goal) = gen.start_goal()?;
    let start_pt = Point::new(start.x, start.y);

    let (heightmap, obstacles) = match scenario {
        Scenario::GoalReaching => {
            let hm = gen.hills(knobs.n_flat_hills, knobs.flat_hill_sigma, [0.5, 1.0], knobs.flat_relief, None);
            (hm, Vec::new())
        }
        Scenario::ObstacleAvoidance => {
            let (nx, ny) = gen.grid();
            let hm = Heightmap::flat(nx, ny, knobs.cell_size, [0.0, 0.0]);
            let kinds = std::iter::repeat_n(0, knobs.n_trees)
                .chain(std::iter::repeat_n(1, knobs.n_walls))
                .chain(std::iter::repeat_n(2, knobs.n_mounds));
            let obstacles = kinds
                .map(|k| gen.obstacle(k, start_pt, goal))
                .collect::<Result<Vec<_>>>()?;
            (hm, obstacles)
        }
        Scenario::UnevenTerrain => {
            let mut attempt = 0;
            loop {
                let hm = gen.hills(
                    knobs.n_hills,
                    knobs.hill_sigma,
                    knobs.hill_height,
                    knobs.max_elevation_gain,
                    Some((start_pt, goal)),
                );
                if gen.gentle_at(&hm, start_pt) && gen.gentle_at(&hm, goal) {
                    break (hm, Vec::new());
                }
                attempt += 1;
                if attempt >= knobs.max_retries {
                    return Err(Error::Generation("start or goal always lands on a steep slope".into()));
                }
            }
        }
    };

    Ok(World {
        scenario,
        seed,
        knobs: knobs.clone(),
        bounds: gen.bounds,
        start,
        goal,
        obstacles,
        heightmap,
    })
}

impl World {
    pub fn validate(&self) -> Result<()> {
        let start = Point::new(self.start.x, self.start.y);
        if !self.bounds.contains(start) || !self.bounds.contains(self.goal) {
            return Err(Error::config("world", "start and goal must lie inside the bounds"));
        }
        for o in &self.obstacles {
            o.validate()?;
            if o.clearance(start) < self.knobs.clearance || o.clearance(self.goal) < self.knobs.clearance {
                return Err(Error::config("world.obstacles", "obstacle violates start/goal clearance"));
            }
        }
        Ok(())
    }

    /// Obstacles plus the four boundary walls.
    pub fn scan_targets(&self) -> Vec<Obstacle> {
        self.obstacles.iter().copied().chain(self.bounds.walls()).collect()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            what: "world".into(),
            message: e.to_string(),
        })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let world: World = toml::from_str(s).map_err(|e| Error::Parse {
            what: "world".into(),
            message: e.to_string(),
        })?;
        world.validate()?;
        Ok(world)
    }

    /// Stable content hash over every numeric field.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.scenario.hash(&mut h);
        self.seed.hash(&mut h);
        let mut put = |v: f64| v.to_bits().hash(&mut h);
        for v in [self.start.x, self.start.y, self.start.psi, self.goal.x, self.goal.y] {
            put(v);
        }
        for o in &self.obstacles {
            match *o {
                Obstacle::Circle { center, radius } => [center.x, center.y, radius].into_iter().for_each(&mut put),
                Obstacle::Segment { p1, p2, thickness } => {
                    [p1.x, p1.y, p2.x, p2.y, thickness].into_iter().for_each(&mut put)
                }
            }
        }
        self.heightmap.elevations.iter().copied().for_each(&mut put);
        h.finish()
    }
}
