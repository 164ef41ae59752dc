//! Sparse navigation rewards and their per-scenario composition.

use std::f64::consts::{FRAC_PI_4, PI};
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::Scenario;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistMode {
    /// Each milestone bonus is paid once per episode.
    #[default]
    Latched,
    /// The Gaussian-bump formula evaluated every step.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub beta_g: f64,
    pub sigma_g: f64,
    pub r_collision: f64,
    pub r_stable_penalty: f64,
    pub dist_mode: DistMode,
    pub angle_threshold: f64,
    pub tilt_threshold: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            beta_g: 100.0,
            sigma_g: 0.05,
            r_collision: -100.0,
            r_stable_penalty: -100.0,
            dist_mode: DistMode::Latched,
            angle_threshold: FRAC_PI_4,
            tilt_threshold: FRAC_PI_4,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_g > 0.0 && self.sigma_g <= 0.1) {
            return Err(Error::config("rewards.sigma_g", "must lie in (0, 0.1]"));
        }
        if !(self.beta_g > 0.0) {
            return Err(Error::config("rewards.beta_g", "must be positive"));
        }
        for (name, t) in [
            ("rewards.angle_threshold", self.angle_threshold),
            ("rewards.tilt_threshold", self.tilt_threshold),
        ] {
            if !(t > 0.0 && t < PI / 2.0) {
                return Err(Error::config(name, "must lie in (0, π/2)"));
            }
        }
        if self.r_collision > 0.0 || self.r_stable_penalty > 0.0 {
            return Err(Error::config("rewards", "penalties must be non-positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents {
    pub heading: f64,
    pub dist: f64,
    pub obs: f64,
    pub stable: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeRewardState {
    pub initial_distance: Option<f64>,
    pub half_awarded: bool,
    pub goal_awarded: bool,
}

impl EpisodeRewardState {
    pub fn start(initial_distance: f64) -> Self {
        Self {
            initial_distance: Some(initial_distance),
            ..Default::default()
        }
    }
}

pub fn r_heading(alpha_goal: f64, cfg: &RewardConfig) -> f64 {
    if alpha_goal.abs() <= cfg.angle_threshold {
        1.0
    } else {
        0.0
    }
}

fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
}

/// Distance milestone reward for the stateless (literal) formula.
pub fn r_dist_literal(d_goal: f64, initial_distance: f64, cfg: &RewardConfig) -> f64 {
    0.5 * cfg.beta_g * normal_pdf(d_goal, initial_distance / 2.0, cfg.sigma_g)
        + cfg.beta_g * normal_pdf(d_goal, 0.0, cfg.sigma_g)
}

pub fn r_dist(
    d_goal: f64,
    state: EpisodeRewardState,
    cfg: &RewardConfig,
    goal_radius: f64,
) -> Result<(f64, EpisodeRewardState)> {
    let d0 = state.initial_distance.ok_or(Error::MissingInitialDistance)?;
    match cfg.dist_mode {
        DistMode::Literal => Ok((r_dist_literal(d_goal, d0, cfg), state)),
        DistMode::Latched => {
            let mut next = state;
            let mut reward = 0.0;
            let at_goal = d_goal <= goal_radius;
            if !next.half_awarded && (d_goal < d0 / 2.0 || at_goal) {
                next.half_awarded = true;
                reward += 0.5 * cfg.beta_g;
            }
            if !next.goal_awarded && at_goal {
                next.goal_awarded = true;
                reward += cfg.beta_g;
            }
            Ok((reward, next))
        }
    }
}

pub fn r_obs(scan: &[f64], d_collision: f64, cfg: &RewardConfig) -> f64 {
    let min = scan.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= d_collision {
        cfg.r_collision
    } else {
        0.0
    }
}

/// Negative penalty when either tilt angle reaches the threshold.
pub fn r_stable(roll: f64, pitch: f64, cfg: &RewardConfig) -> f64 {
    if roll.abs() >= cfg.tilt_threshold || pitch.abs() >= cfg.tilt_threshold {
        cfg.r_stable_penalty
    } else {
        0.0
    }
}

/// Fills `total` with the scenario's sum; components a scenario does not use
/// are zeroed.
pub fn total_reward(scenario: Scenario, mut c: RewardComponents) -> RewardComponents {
    match scenario {
        Scenario::GoalReaching => {
            c.obs = 0.0;
            c.stable = 0.0;
        }
        Scenario::ObstacleAvoidance => c.stable = 0.0,
        Scenario::UnevenTerrain => c.obs = 0.0,
    }
    c.total = c.heading + c.dist + c.obs + c.stable;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceAxes {
    /// d_goal × α_goal
    DistAngle,
    /// d_goal × min(D_obs)
    DistScan,
}

impl FromStr for SurfaceAxes {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dist_angle" | "dist-angle" => Ok(SurfaceAxes::DistAngle),
            "dist_scan" | "dist-scan" => Ok(SurfaceAxes::DistScan),
            other => Err(Error::config("axes", format!("unknown surface axes `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d_min: f64,
    pub d_max: f64,
    pub d_points: usize,
    /// Second axis range: α_goal (radians) or min scan range (meters).
    pub y_min: f64,
    pub y_max: f64,
    pub y_points: usize,
    pub initial_distance: f64,
    /// α_goal held fixed on the `dist_scan` surface.
    pub fixed_alpha: f64,
    pub d_collision: f64,
}

impl GridSpec {
    pub fn default_for(axes: SurfaceAxes) -> Self {
        let (y_min, y_max) = match axes {
            SurfaceAxes::DistAngle => (-PI, PI),
            SurfaceAxes::DistScan => (0.0, 10.0),
        };
        Self {
            d_min: 0.0,
            d_max: 50.0,
            d_points: 200,
            y_min,
            y_max,
            y_points: 200,
            initial_distance: 40.0,
            fixed_alpha: 0.0,
            d_collision: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_points < 1 || self.y_points < 1 {
            return Err(Error::config("grid", "needs at least one point per axis"));
        }
        if !(self.d_max >= self.d_min) || !(self.y_max >= self.y_min) {
            return Err(Error::config("grid", "axis maximum below minimum"));
        }
        if !(self.initial_distance > 0.0) {
            return Err(Error::config("grid.initial_distance", "must be positive"));
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardSurface {
    pub axes: SurfaceAxes,
    pub d_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// `values[j][i]` at `(d_values[i], y_values[j])`.
    pub values: Vec<Vec<f64>>,
}

/// Stateless r_tot over a 2-D grid, using the literal distance reward.
pub fn reward_surface(axes: SurfaceAxes, grid: &GridSpec, cfg: &RewardConfig) -> Result<RewardSurface> {
    grid.validate()?;
    let d_values = linspace(grid.d_min, grid.d_max, grid.d_points);
    let y_values = linspace(grid.y_min, grid.y_max, grid.y_points);
    let values = y_values
        .iter()
        .map(|&y| {
            d_values
                .iter()
                .map(|&d| {
                    let dist = r_dist_literal(d, grid.initial_distance, cfg);
                    let c = match axes {
                        SurfaceAxes::DistAngle => RewardComponents {
                            heading: r_heading(y, cfg),
                            dist,
                            ..Default::default()
                        },
                        SurfaceAxes::DistScan => RewardComponents {
                            heading: r_heading(grid.fixed_alpha, cfg),
                            dist,
                            obs: r_obs(&[y], grid.d_collision, cfg),
                            ..Default::default()
                        },
                    };
                    let scenario = match axes {
                        SurfaceAxes::DistAngle => Scenario::GoalReaching,
                        SurfaceAxes::DistScan => Scenario::ObstacleAvoidance,
                    };
                    total_reward(scenario, c).total
                })
                .collect()
        })
        .collect();
    Ok(RewardSurface {
        axes,
        d_values,
        y_values,
        values,
    })
}

impl RewardSurface {
    pub fn cell_count(&self) -> usize {
        self.d_values.len() * self.y_values.len()
    }

    /// Fraction of cells with |r_tot| above `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let hits = self.values.iter().flatten().filter(|v| v.abs() > threshold).count();
        hits as f64 / self.cell_count() as f64
    }

    /// CSV grid: the header row carries the d_goal values, each following row
    /// starts with its second-axis value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let corner = match self.axes {
            SurfaceAxes::DistAngle => "alpha_goal\\d_goal",
            SurfaceAxes::DistScan => "min_scan\\d_goal",
        };
        let mut header = vec![corner.to_string()];
        header.extend(self.d_values.iter().map(|d| d.to_string()));
        w.write_record(&header)?;
        for (y, row) in self.y_values.iter().zip(&self.values) {
            let mut record = vec![y.to_string()];
            record.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}
