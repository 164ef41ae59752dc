use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::RobotPose;
use crate::error::Result;
use crate::policy::Action;
use crate::rewards::RewardComponents;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TerminationCause {
    #[default]
    Running,
    Goal,
    Collision,
    FlipOver,
    Timeout,
}

impl TerminationCause {
    pub fn is_done(self) -> bool {
        self != TerminationCause::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TerminationCause::Running => "running",
            TerminationCause::Goal => "goal",
            TerminationCause::Collision => "collision",
            TerminationCause::FlipOver => "flip_over",
            TerminationCause::Timeout => "timeout",
        }
    }
}

impl fmt::Display for TerminationCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    /// Policy input at this step.
    pub features: Vec<f64>,
    pub raw: Action,
    pub projected: Action,
    pub rewards: RewardComponents,
    /// Pose after executing the projected action.
    pub pose: RobotPose,
    pub cause: TerminationCause,
}

/// One rollout ξ_k. `cause` is `Running` when the sampled horizon cut the
/// episode before the environment terminated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub horizon_sampled: u64,
    pub start_pose: RobotPose,
    pub cause: TerminationCause,
}

impl Trajectory {
    pub fn from_steps(steps: Vec<TrajectoryStep>, horizon_sampled: u64) -> Self {
        let cause = steps.last().map(|s| s.cause).unwrap_or_default();
        Self {
            steps,
            horizon_sampled,
            start_pose: RobotPose::default(),
            cause,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.steps.iter().map(|s| s.rewards.total).sum()
    }

    /// Robot elevation at the start and after every step.
    pub fn z_trace(&self) -> Vec<f64> {
        std::iter::once(self.start_pose.z)
            .chain(self.steps.iter().map(|s| s.pose.z))
            .collect()
    }

    pub fn max_action_inf_norm(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| s.projected)
            .fold(0.0_f64, |m, a| m.max(a.abs()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub raw_action: Action,
    pub projected_action: Action,
    pub r_heading: f64,
    pub r_dist: f64,
    pub r_obs: f64,
    pub r_stable: f64,
    pub r_tot: f64,
    pub cause: TerminationCause,
}

/// Writes one JSON object per step.
pub fn write_jsonl<W: Write>(mut out: W, episode: usize, trajectory: &Trajectory) -> Result<()> {
    for (i, s) in trajectory.steps.iter().enumerate() {
        let record = StepRecord {
            episode,
            step: i,
            x: s.pose.x,
            y: s.pose.y,
            psi: s.pose.psi,
            z: s.pose.z,
            roll: s.pose.roll,
            pitch: s.pose.pitch,
            raw_action: s.raw,
            projected_action: s.projected,
            r_heading: s.rewards.heading,
            r_dist: s.rewards.dist,
            r_obs: s.rewards.obs,
            r_stable: s.rewards.stable,
            r_tot: s.rewards.total,
            cause: s.cause,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
