//! Post-training navigation metrics: success rate, trajectory length and
//! elevation cost.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{generate_world, NavEnv, World};
use crate::error::{Error, Result};
use crate::policy::{project_action, PolicyParameters};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::trainer::TrainConfig;
use crate::trajectory::{TerminationCause, Trajectory, TrajectoryStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Execute the projected location parameter μ(s).
    Deterministic,
    /// Sample actions exactly as during training.
    Stochastic,
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(EvalMode::Deterministic),
            "stochastic" => Ok(EvalMode::Stochastic),
            other => Err(Error::config("mode", format!("unknown evaluation mode `{other}`"))),
        }
    }
}

/// Euclidean norm of successive elevation differences along a trace.
pub fn elevation_cost(z_trace: &[f64]) -> f64 {
    z_trace
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub episode: usize,
    pub world_seed: u64,
    pub success: bool,
    pub steps: usize,
    pub cause: TerminationCause,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub elevation_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Percentage of episodes that reached the goal without collision or flip-over.
    pub success_rate: f64,
    /// Mean steps over successful episodes; `None` when nothing succeeded.
    pub avg_traj_length: Option<f64>,
    /// Mean steps over all episodes, failures counted at their final step.
    pub avg_traj_length_all: f64,
    /// Mean per-episode elevation cost over all episodes.
    pub elevation_cost: f64,
    pub elevation_cost_successful: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub summary: EvalSummary,
    pub rows: Vec<EvalRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        let n = rows.len();
        let successes = rows.iter().filter(|r| r.success).count();
        let summary = EvalSummary {
            episodes: n,
            success_rate: if n == 0 { 0.0 } else { 100.0 * successes as f64 / n as f64 },
            avg_traj_length: mean(rows.iter().filter(|r| r.success).map(|r| r.steps as f64)),
            avg_traj_length_all: mean(rows.iter().map(|r| r.steps as f64)).unwrap_or(0.0),
            elevation_cost: mean(rows.iter().map(|r| r.elevation_cost)).unwrap_or(0.0),
            elevation_cost_successful: mean(rows.iter().filter(|r| r.success).map(|r| r.elevation_cost)),
        };
        Self { summary, rows }
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.summary)?;
        Ok(())
    }
}

/// Runs one full episode (up to `cfg.max_steps`) on `world`.
pub fn run_episode(
    params: &PolicyParameters,
    cfg: &TrainConfig,
    world: &World,
    mode: EvalMode,
    rng_index: u64,
    eval_seed: u64,
) -> Result<Trajectory> {
    let mut rng = stream_rng(eval_seed, Stream::EvalPolicy, rng_index);
    let mut env = NavEnv::new(world, cfg.env, cfg.rewards, cfg.max_steps);
    let start_pose = *env.pose();
    let mut obs = env.observation();
    let mut steps = Vec::new();
    loop {
        let features = obs.features();
        let (raw, projected) = match mode {
            EvalMode::Deterministic => {
                let mu = params.forward_mean(&features)?;
                (mu, project_action(mu, cfg.delta))
            }
            EvalMode::Stochastic => {
                let s = params.sample_action(&features, cfg.delta, &mut rng)?;
                (s.raw, s.projected)
            }
        };
        let out = env.step(projected)?;
        steps.push(TrajectoryStep {
            features,
            raw,
            projected,
            rewards: out.rewards,
            pose: *env.pose(),
            cause: out.cause,
        });
        if out.done {
            break;
        }
        obs = out.observation;
    }
    let mut traj = Trajectory::from_steps(steps, cfg.max_steps as u64);
    traj.start_pose = start_pose;
    Ok(traj)
}

fn row(episode: usize, world_seed: u64, traj: &Trajectory) -> EvalRow {
    EvalRow {
        episode,
        world_seed,
        success: traj.cause == TerminationCause::Goal,
        steps: traj.len(),
        cause: traj.cause,
        episode_return: traj.undiscounted_return(),
        elevation_cost: elevation_cost(&traj.z_trace()),
    }
}

/// Evaluates on `n_episodes` worlds derived from `eval_seed`, returning the
/// report and every trajectory.
pub fn evaluate_traced(
    params: &PolicyParameters,
    cfg: &TrainConfig,
    n_episodes: usize,
    mode: EvalMode,
    eval_seed: u64,
) -> Result<(EvalReport, Vec<Trajectory>)> {
    if n_episodes == 0 {
        return Err(Error::config("episodes", "evaluation needs at least one episode"));
    }
    cfg.validate()?;
    params.validate()?;
    let runs = (0..n_episodes)
        .into_par_iter()
        .map(|i| {
            let world_seed = derive_seed(eval_seed, Stream::EvalWorld, i as u64);
            let world = generate_world(cfg.scenario, world_seed, &cfg.generation)?;
            let traj = run_episode(params, cfg, &world, mode, i as u64, eval_seed)?;
            Ok((row(i, world_seed, &traj), traj))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, trajectories) = runs.into_iter().unzip();
    Ok((EvalReport::from_rows(rows), trajectories))
}

pub fn evaluate(
    params: &PolicyParameters,
    cfg: &TrainConfig,
    n_episodes: usize,
    mode: EvalMode,
    eval_seed: u64,
) -> Result<EvalReport> {
    evaluate_traced(params, cfg, n_episodes, mode, eval_seed).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::ApproximatorSpec;
    use crate::policy::Family;
    use proptest::prelude::*;

    #[test]
    fn elevation_cost_examples() {
        assert_eq!(elevation_cost(&[0.0, 0.0, 0.0]), 0.0);
        assert!((elevation_cost(&[0.0, 0.3, 0.5]) - 0.13f64.sqrt()).abs() < 1e-15);
        assert!((elevation_cost(&[0.0, 0.3, 0.5]) - 0.36056).abs() < 1e-5);
        assert_eq!(elevation_cost(&[4.2]), 0.0);
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            max_steps: 50,
            hidden_layers: vec![4],
            ..Default::default()
        }
    }

    #[test]
    fn stationary_policy_never_succeeds() {
        let c = cfg();
        let spec = c.policy_spec();
        let n = spec.weight_count();
        let params = PolicyParameters::new(spec, vec![0.0; n], 0.25, Family::Cauchy).unwrap();
        let report = evaluate(&params, &c, 6, EvalMode::Deterministic, 3).unwrap();
        assert_eq!(report.summary.success_rate, 0.0);
        assert_eq!(report.summary.avg_traj_length, None);
        assert!(report.rows.iter().all(|r| r.cause == TerminationCause::Timeout && r.steps == 50));
    }

    #[test]
    fn all_successes_is_hundred_percent() {
        let rows = (0..4)
            .map(|i| EvalRow {
                episode: i,
                world_seed: 0,
                success: true,
                steps: 10 + i,
                cause: TerminationCause::Goal,
                episode_return: 1.0,
                elevation_cost: 0.5,
            })
            .collect();
        let r = EvalReport::from_rows(rows);
        assert_eq!(r.summary.success_rate, 100.0);
        assert_eq!(r.summary.avg_traj_length, Some(11.5));
    }

    #[test]
    fn deterministic_eval_repeats() {
        let c = TrainConfig {
            scenario: crate::env::Scenario::UnevenTerrain,
            ..cfg()
        };
        let params = c.initial_policy(4).unwrap();
        let a = evaluate(&params, &c, 3, EvalMode::Stochastic, 8).unwrap();
        let b = evaluate(&params, &c, 3, EvalMode::Stochastic, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_zero_episodes_and_bad_params() {
        let c = cfg();
        let params = c.initial_policy(0).unwrap();
        assert!(evaluate(&params, &c, 0, EvalMode::Deterministic, 0).is_err());
        let wrong = PolicyParameters::new(ApproximatorSpec::linear(6, 2), vec![0.0; 12], 0.25, Family::Cauchy).unwrap();
        assert!(evaluate(&wrong, &c, 1, EvalMode::Deterministic, 0).is_err());
    }

    proptest! {
        #[test]
        fn shift_invariant(z in prop::collection::vec(-5.0f64..5.0, 1..30), c in -10.0f64..10.0) {
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            prop_assert!((elevation_cost(&z) - elevation_cost(&shifted)).abs() < 1e-9);
        }

        #[test]
        fn monotone_in_length(z in prop::collection::vec(-5.0f64..5.0, 1..30), extra in -5.0f64..5.0) {
            let mut longer = z.clone();
            longer.push(extra);
            prop_assert!(elevation_cost(&longer) >= elevation_cost(&z));
        }
    }
}
