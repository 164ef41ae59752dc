//! 2.5D differential-drive navigation environment.

mod geometry;
mod heightmap;
mod robot;
mod world;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use geometry::{
    beam_angle, point_segment_distance, ray_circle, ray_segment, scan, Obstacle, Point, SCAN_BEAMS, SCAN_MAX_RANGE,
};
pub use heightmap::Heightmap;
pub use robot::{goal_geometry, pose_from_terrain, wrap_angle, RobotPose};
pub use world::{generate_world, Bounds, GenerationKnobs, Scenario, StartPose, World};

use crate::error::{Error, Result};
use crate::policy::Action;
use crate::rewards::{self, EpisodeRewardState, RewardComponents, RewardConfig};
use crate::trajectory::TerminationCause;

/// Physical limits and termination thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub v_max: f64,
    pub omega_max: f64,
    pub dt: f64,
    pub goal_radius: f64,
    pub d_collision: f64,
    pub flip_threshold: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            v_max: 1.0,
            omega_max: 1.0,
            dt: 0.1,
            goal_radius: 1.0,
            d_collision: 0.5,
            flip_threshold: PI / 3.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("env.v_max", self.v_max),
            ("env.omega_max", self.omega_max),
            ("env.dt", self.dt),
            ("env.goal_radius", self.goal_radius),
            ("env.d_collision", self.d_collision),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        if !(self.flip_threshold > 0.0 && self.flip_threshold < PI / 2.0) {
            return Err(Error::config("env.flip_threshold", "must lie in (0, π/2)"));
        }
        Ok(())
    }
}

/// Observation features available to the policy. Which ones the policy sees
/// depends on the scenario: 4, 4 + 720, or 6 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub scenario: Scenario,
    pub d_goal: f64,
    pub alpha_goal: f64,
    pub prev_action: Action,
    pub roll: f64,
    pub pitch: f64,
    /// Empty unless the scenario uses the range scanner.
    pub scan: Vec<f64>,
}

/// Distance scale applied to d_goal and scan ranges in the policy features.
pub const DISTANCE_SCALE: f64 = 10.0;

pub fn observation_dim(scenario: Scenario) -> usize {
    match scenario {
        Scenario::GoalReaching => 4,
        Scenario::ObstacleAvoidance => 4 + SCAN_BEAMS,
        Scenario::UnevenTerrain => 6,
    }
}

impl Observation {
    /// Raw observation in physical units.
    pub fn to_vector(&self) -> Vec<f64> {
        self.build(1.0, 1.0)
    }

    /// Policy input: the raw observation with distances divided by
    /// [`DISTANCE_SCALE`] and the bearing by π so every entry is O(1).
    pub fn features(&self) -> Vec<f64> {
        self.build(1.0 / DISTANCE_SCALE, 1.0 / PI)
    }

    fn build(&self, dist: f64, angle: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(observation_dim(self.scenario));
        v.extend_from_slice(&[
            self.d_goal * dist,
            self.alpha_goal * angle,
            self.prev_action[0],
            self.prev_action[1],
        ]);
        match self.scenario {
            Scenario::GoalReaching => {}
            Scenario::ObstacleAvoidance => v.extend(self.scan.iter().map(|r| r * dist)),
            Scenario::UnevenTerrain => v.extend_from_slice(&[self.roll, self.pitch]),
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub rewards: RewardComponents,
    pub done: bool,
    pub cause: TerminationCause,
}

/// Unicycle kinematics for one control period, kept inside the world bounds
/// and re-grounded on the terrain.
pub fn advance(world: &World, pose: &RobotPose, action: Action, cfg: &EnvConfig) -> RobotPose {
    let v = action[0] * cfg.v_max;
    let omega = action[1] * cfg.omega_max;
    let (s, c) = pose.psi.sin_cos();
    let next = world
        .bounds
        .clamp(Point::new(pose.x + v * c * cfg.dt, pose.y + v * s * cfg.dt));
    pose_from_terrain(&world.heightmap, next.x, next.y, wrap_angle(pose.psi + omega * cfg.dt))
}

/// One episode's worth of simulator state.
#[derive(Debug, Clone)]
pub struct NavEnv<'w> {
    world: &'w World,
    cfg: EnvConfig,
    rewards: RewardConfig,
    max_steps: usize,
    scan_targets: Vec<Obstacle>,
    pose: RobotPose,
    prev_action: Action,
    reward_state: EpisodeRewardState,
    steps: usize,
}

impl<'w> NavEnv<'w> {
    pub fn new(world: &'w World, cfg: EnvConfig, rewards: RewardConfig, max_steps: usize) -> Self {
        let scan_targets = match world.scenario {
            Scenario::ObstacleAvoidance => world.scan_targets(),
            _ => Vec::new(),
        };
        let pose = pose_from_terrain(&world.heightmap, world.start.x, world.start.y, world.start.psi);
        let (d0, _) = goal_geometry(&pose, world.goal);
        Self {
            world,
            cfg,
            rewards,
            max_steps,
            scan_targets,
            pose,
            prev_action: [0.0; 2],
            reward_state: EpisodeRewardState::start(d0),
            steps: 0,
        }
    }

    pub fn world(&self) -> &World {
        self.world
    }

    pub fn pose(&self) -> &RobotPose {
        &self.pose
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reward_state(&self) -> EpisodeRewardState {
        self.reward_state
    }

    fn scan_now(&self) -> Vec<f64> {
        if self.world.scenario == Scenario::ObstacleAvoidance {
            scan(&self.scan_targets, self.pose.position(), self.pose.psi)
        } else {
            Vec::new()
        }
    }

    fn observe(&self, scan: Vec<f64>) -> Observation {
        let (d_goal, alpha_goal) = goal_geometry(&self.pose, self.world.goal);
        Observation {
            scenario: self.world.scenario,
            d_goal,
            alpha_goal,
            prev_action: self.prev_action,
            roll: self.pose.roll,
            pitch: self.pose.pitch,
            scan,
        }
    }

    pub fn observation(&self) -> Observation {
        self.observe(self.scan_now())
    }

    /// Executes an already-projected action.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        self.pose = advance(self.world, &self.pose, action, &self.cfg);
        self.prev_action = action;
        self.steps += 1;

        let obs = self.observe(self.scan_now());
        let scenario = self.world.scenario;
        let (dist, next_state) = rewards::r_dist(obs.d_goal, self.reward_state, &self.rewards, self.cfg.goal_radius)?;
        self.reward_state = next_state;

        let collided = scenario == Scenario::ObstacleAvoidance
            && obs.scan.iter().any(|&r| r <= self.cfg.d_collision);
        let flipped = scenario == Scenario::UnevenTerrain
            && (obs.roll.abs() >= self.cfg.flip_threshold || obs.pitch.abs() >= self.cfg.flip_threshold);

        let components = rewards::total_reward(
            scenario,
            RewardComponents {
                heading: rewards::r_heading(obs.alpha_goal, &self.rewards),
                dist,
                obs: if scenario == Scenario::ObstacleAvoidance {
                    rewards::r_obs(&obs.scan, self.cfg.d_collision, &self.rewards)
                } else {
                    0.0
                },
                stable: rewards::r_stable(obs.roll, obs.pitch, &self.rewards),
                total: 0.0,
            },
        );

        let cause = if collided {
            TerminationCause::Collision
        } else if flipped {
            TerminationCause::FlipOver
        } else if obs.d_goal <= self.cfg.goal_radius {
            TerminationCause::Goal
        } else if self.steps >= self.max_steps {
            TerminationCause::Timeout
        } else {
            TerminationCause::Running
        };

        Ok(StepOutcome {
            observation: obs,
            rewards: components,
            done: cause.is_done(),
            cause,
        })
    }
}
