//! Training loop: rollout, gradient estimate, clip, adaptive-moment ascent.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximator::ApproximatorSpec;
use crate::env::{generate_world, observation_dim, EnvConfig, GenerationKnobs, NavEnv, Scenario, World};
use crate::error::{Error, Result};
use crate::estimator::{check_gamma, estimate_gradient, inf_norm, sample_horizon, GradientEstimate};
use crate::optimizer::{OptimizerConfig, OptimizerState};
use crate::policy::{Family, PolicyParameters, ACTION_DIM};
use crate::rewards::RewardConfig;
use crate::rng::{derive_seed, stream_rng, Rng, Stream};
use crate::trajectory::{TerminationCause, Trajectory, TrajectoryStep};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub scenario: Scenario,
    pub family: Family,
    pub gamma: f64,
    pub sigma: f64,
    /// Action bound: executed actions satisfy ‖a‖∞ ≤ delta.
    pub delta: f64,
    /// Gradient bound: applied gradients satisfy ‖g‖∞ ≤ phi.
    pub phi: f64,
    pub episodes: usize,
    pub max_steps: usize,
    pub seeds: Vec<u64>,
    pub hidden_layers: Vec<usize>,
    /// Reuse the episode-0 world for every episode.
    pub fixed_world: bool,
    /// Stop once the windowed mean return has not improved for this many episodes.
    pub plateau_window: Option<usize>,
    pub optimizer: OptimizerConfig,
    pub rewards: RewardConfig,
    pub env: EnvConfig,
    pub generation: GenerationKnobs,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::GoalReaching,
            family: Family::Cauchy,
            gamma: 0.99,
            sigma: 0.25,
            delta: 1.0,
            phi: 10.0,
            episodes: 120,
            max_steps: 300,
            seeds: (0..6).collect(),
            hidden_layers: vec![64],
            fixed_world: false,
            plateau_window: None,
            optimizer: OptimizerConfig::default(),
            rewards: RewardConfig::default(),
            env: EnvConfig::default(),
            generation: GenerationKnobs::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        for (name, v) in [("sigma", self.sigma), ("delta", self.delta), ("phi", self.phi)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.plateau_window == Some(0) {
            return Err(Error::config("plateau_window", "must be at least 1"));
        }
        self.policy_spec().validate()?;
        self.optimizer.validate()?;
        self.rewards.validate()?;
        self.env.validate()?;
        self.generation.validate()
    }

    pub fn policy_spec(&self) -> ApproximatorSpec {
        ApproximatorSpec::mlp(observation_dim(self.scenario), self.hidden_layers.clone(), ACTION_DIM)
    }

    pub fn world_seed(&self, seed: u64, episode: usize) -> u64 {
        let index = if self.fixed_world { 0 } else { episode as u64 };
        derive_seed(seed, Stream::World, index)
    }

    pub fn world(&self, seed: u64, episode: usize) -> Result<World> {
        generate_world(self.scenario, self.world_seed(seed, episode), &self.generation)
    }

    pub fn initial_policy(&self, seed: u64) -> Result<PolicyParameters> {
        // The initialization stream ignores the family, so paired runs start
        // from the same weights.
        PolicyParameters::initialize(
            self.policy_spec(),
            self.sigma,
            self.family,
            &mut stream_rng(seed, Stream::Init, 0),
        )
    }
}

/// Rolls out at most `min(horizon + 1, max_steps)` steps, stopping early when
/// the environment terminates.
pub fn rollout_with_horizon(
    world: &World,
    params: &PolicyParameters,
    cfg: &TrainConfig,
    horizon: u64,
    rng: &mut Rng,
) -> Result<Trajectory> {
    let limit = horizon.saturating_add(1).min(cfg.max_steps as u64) as usize;
    let mut env = NavEnv::new(world, cfg.env, cfg.rewards, cfg.max_steps);
    let start_pose = *env.pose();
    let mut obs = env.observation();
    let mut steps = Vec::with_capacity(limit.min(1024));

    while steps.len() < limit {
        let features = obs.features();
        let sample = params.sample_action(&features, cfg.delta, rng)?;
        let outcome = env.step(sample.projected)?;
        steps.push(TrajectoryStep {
            features,
            raw: sample.raw,
            projected: sample.projected,
            rewards: outcome.rewards,
            pose: *env.pose(),
            cause: outcome.cause,
        });
        if outcome.done {
            break;
        }
        obs = outcome.observation;
    }

    let mut traj = Trajectory::from_steps(steps, horizon);
    traj.start_pose = start_pose;
    Ok(traj)
}

/// Samples `T ~ Geom(1 − √γ)` from `rng`, then rolls out.
pub fn rollout(world: &World, params: &PolicyParameters, cfg: &TrainConfig, rng: &mut Rng) -> Result<Trajectory> {
    let horizon = sample_horizon(cfg.gamma, rng)?;
    rollout_with_horizon(world, params, cfg, horizon, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub seed: u64,
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub steps: usize,
    pub cause: TerminationCause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub seed: u64,
    pub episode: usize,
    pub horizon_sampled: u64,
    pub horizon_used: u64,
    pub raw_grad_inf: f64,
    pub clipped_grad_inf: f64,
    pub max_action_inf: f64,
    pub world_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub family: Family,
    pub scenario: Scenario,
    pub episodes: Vec<EpisodeRow>,
    pub iterations: Vec<IterationRow>,
}

impl RunRecord {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.episode_return).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub record: RunRecord,
    pub params: PolicyParameters,
    pub optimizer: OptimizerState,
}

fn windowed_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Trains one seed for `cfg.episodes` iterations.
pub fn train(cfg: &TrainConfig, seed: u64) -> Result<TrainOutcome> {
    train_from(cfg, seed, cfg.initial_policy(seed)?)
}

pub fn train_from(cfg: &TrainConfig, seed: u64, mut params: PolicyParameters) -> Result<TrainOutcome> {
    cfg.validate()?;
    params.validate()?;
    let mut optimizer = OptimizerState::new(cfg.optimizer, params.weights.len());
    let mut policy_rng = stream_rng(seed, Stream::Policy, 0);
    let mut record = RunRecord {
        seed,
        family: params.family,
        scenario: cfg.scenario,
        episodes: Vec::with_capacity(cfg.episodes),
        iterations: Vec::with_capacity(cfg.episodes),
    };
    let mut fixed: Option<World> = None;
    let mut best_window = f64::NEG_INFINITY;
    let mut since_best = 0;

    for episode in 0..cfg.episodes {
        let world = match (&fixed, cfg.fixed_world) {
            (Some(w), true) => w.clone(),
            _ => {
                let w = cfg.world(seed, episode)?;
                if cfg.fixed_world {
                    fixed = Some(w.clone());
                }
                w
            }
        };
        let horizon = sample_horizon(cfg.gamma, &mut stream_rng(seed, Stream::Horizon, episode as u64))?;
        let traj = rollout_with_horizon(&world, &params, cfg, horizon, &mut policy_rng)?;

        let raw = estimate_gradient(&params, &traj, cfg.gamma)?;
        if let Some(index) = raw.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { episode, index });
        }
        let estimate = GradientEstimate::new(raw, cfg.phi, horizon, traj.len() as u64 - 1);
        optimizer.step(&mut params.weights, &estimate.clipped)?;

        record.episodes.push(EpisodeRow {
            seed,
            episode,
            episode_return: traj.undiscounted_return(),
            steps: traj.len(),
            cause: traj.cause,
        });
        record.iterations.push(IterationRow {
            seed,
            episode,
            horizon_sampled: estimate.horizon_sampled,
            horizon_used: estimate.horizon_used,
            raw_grad_inf: inf_norm(&estimate.raw),
            clipped_grad_inf: inf_norm(&estimate.clipped),
            max_action_inf: traj.max_action_inf_norm(),
            world_fingerprint: world.fingerprint(),
        });

        if let Some(window) = cfg.plateau_window {
            if record.episodes.len() >= window {
                let returns = record.returns();
                let m = windowed_mean(&returns[returns.len() - window..]);
                if m > best_window {
                    best_window = m;
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= window {
                        break;
                    }
                }
            }
        }
    }

    Ok(TrainOutcome {
        record,
        params,
        optimizer,
    })
}

/// Trains every seed in `cfg.seeds` concurrently; results follow seed order.
pub fn train_all(cfg: &TrainConfig) -> Result<Vec<TrainOutcome>> {
    cfg.validate()?;
    cfg.seeds.par_iter().map(|&s| train(cfg, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub first_mean: f64,
    pub first_std: f64,
    pub second_mean: f64,
    pub second_std: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub first: Vec<TrainOutcome>,
    pub second: Vec<TrainOutcome>,
    pub first_family: Family,
    pub second_family: Family,
    pub curves: Vec<CurvePoint>,
}

/// Mean and population standard deviation of each episode's return across runs.
pub fn curve(records: &[&RunRecord]) -> Vec<(f64, f64)> {
    let len = records.iter().map(|r| r.episodes.len()).max().unwrap_or(0);
    (0..len)
        .map(|k| {
            let xs: Vec<f64> = records
                .iter()
                .filter_map(|r| r.episodes.get(k).map(|e| e.episode_return))
                .collect();
            let mean = windowed_mean(&xs);
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            (mean, var.sqrt())
        })
        .collect()
}

/// Runs two configurations that differ only in policy family over the same
/// seeds and worlds.
pub fn run_comparison(first: &TrainConfig, second: &TrainConfig) -> Result<Comparison> {
    if first.seeds != second.seeds {
        return Err(Error::config("seeds", "compared configurations must share a seed list"));
    }
    let aligned = TrainConfig {
        family: first.family,
        ..second.clone()
    };
    if &aligned != first {
        return Err(Error::config("family", "compared configurations may differ only in family"));
    }
    first.validate()?;

    let jobs: Vec<(&TrainConfig, u64)> = first
        .seeds
        .iter()
        .map(|&s| (first, s))
        .chain(second.seeds.iter().map(|&s| (second, s)))
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|(cfg, s)| train(cfg, *s))
        .collect::<Result<Vec<_>>>()?;
    let second_runs = results.split_off(first.seeds.len());
    let first_runs = results;

    let a = curve(&first_runs.iter().map(|o| &o.record).collect::<Vec<_>>());
    let b = curve(&second_runs.iter().map(|o| &o.record).collect::<Vec<_>>());
    let curves = (0..a.len().max(b.len()))
        .map(|k| {
            let (am, asd) = a.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
            let (bm, bsd) = b.get(k).copied().unwrap_or((f64::NAN, f64::NAN));
            CurvePoint {
                episode: k,
                first_mean: am,
                first_std: asd,
                second_mean: bm,
                second_std: bsd,
            }
        })
        .collect();

    Ok(Comparison {
        first: first_runs,
        second: second_runs,
        first_family: first.family,
        second_family: second.family,
        curves,
    })
}

impl Comparison {
    /// Columns `episode,<family>_mean,<family>_std` for each side.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let a = self.first_family.to_string();
        let b = if self.second_family == self.first_family {
            format!("{}_b", self.second_family)
        } else {
            self.second_family.to_string()
        };
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "episode".to_string(),
            format!("{a}_mean"),
            format!("{a}_std"),
            format!("{b}_mean"),
            format!("{b}_std"),
        ])?;
        for p in &self.curves {
            w.write_record([
                p.episode.to_string(),
                p.first_mean.to_string(),
                p.first_std.to_string(),
                p.second_mean.to_string(),
                p.second_std.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_episodes_csv<'a, W: Write>(out: W, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    // Header written explicitly so an empty run still produces a schema line.
    w.write_record(["seed", "episode", "return", "steps", "cause"])?;
    for r in records {
        for e in &r.episodes {
            w.write_record([
                e.seed.to_string(),
                e.episode.to_string(),
                e.episode_return.to_string(),
                e.steps.to_string(),
                e.cause.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv<'a, W: Write>(out: W, records: impl IntoIterator<Item = &'a RunRecord>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "seed",
        "episode",
        "horizon_sampled",
        "horizon_used",
        "raw_grad_inf",
        "clipped_grad_inf",
        "max_action_inf",
        "world_fingerprint",
    ])?;
    for r in records {
        for it in &r.iterations {
            w.serialize(it)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small() -> TrainConfig {
        TrainConfig {
            episodes: 5,
            max_steps: 40,
            seeds: vec![1, 2],
            hidden_layers: vec![8],
            ..Default::default()
        }
    }

    #[test]
    fn zero_horizon_gives_one_step() {
        let cfg = small();
        let world = cfg.world(1, 0).unwrap();
        let params = cfg.initial_policy(1).unwrap();
        let t = rollout_with_horizon(&world, &params, &cfg, 0, &mut seeded(0)).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn start_next_to_goal_ends_immediately() {
        let cfg = small();
        let mut world = cfg.world(1, 0).unwrap();
        world.start.psi = 0.0;
        world.goal = crate::env::Point::new(world.start.x + 0.5, world.start.y);
        let params = cfg.initial_policy(1).unwrap();
        let t = rollout_with_horizon(&world, &params, &cfg, 100, &mut seeded(0)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.cause, TerminationCause::Goal);
    }

    #[test]
    fn rollout_respects_caps() {
        let cfg = small();
        let world = cfg.world(3, 0).unwrap();
        let params = cfg.initial_policy(3).unwrap();
        let mut rng = seeded(5);
        for _ in 0..20 {
            let t = rollout(&world, &params, &cfg, &mut rng).unwrap();
            assert!(t.len() <= cfg.max_steps);
            assert!(t.len() as u64 <= t.horizon_sampled + 1);
            assert!(t.max_action_inf_norm() <= cfg.delta);
        }
    }

    #[test]
    fn zero_eta_keeps_weights() {
        let mut cfg = small();
        cfg.optimizer.eta = 0.0;
        let out = train(&cfg, 1).unwrap();
        assert_eq!(out.params, cfg.initial_policy(1).unwrap());
        assert_eq!(out.record.episodes.len(), 5);
    }

    #[test]
    fn zero_episodes_is_empty() {
        let cfg = TrainConfig { episodes: 0, ..small() };
        let out = train(&cfg, 1).unwrap();
        assert!(out.record.episodes.is_empty());
        assert_eq!(out.params, cfg.initial_policy(1).unwrap());
    }

    #[test]
    fn training_is_reproducible() {
        let cfg = small();
        assert_eq!(train(&cfg, 2).unwrap(), train(&cfg, 2).unwrap());
    }

    #[test]
    fn plateau_stops_early() {
        let mut cfg = small();
        cfg.episodes = 60;
        cfg.plateau_window = Some(3);
        cfg.optimizer.eta = 0.0;
        let out = train(&cfg, 1).unwrap();
        assert!(out.record.episodes.len() < 60);
    }

    #[test]
    fn comparison_shares_worlds() {
        let a = small();
        let b = TrainConfig {
            family: Family::Gaussian,
            ..small()
        };
        let cmp = run_comparison(&a, &b).unwrap();
        assert_eq!(cmp.curves.len(), 5);
        for (x, y) in cmp.first.iter().zip(&cmp.second) {
            let fx: Vec<_> = x.record.iterations.iter().map(|i| i.world_fingerprint).collect();
            let fy: Vec<_> = y.record.iterations.iter().map(|i| i.world_fingerprint).collect();
            assert_eq!(fx, fy);
            let hx: Vec<_> = x.record.iterations.iter().map(|i| i.horizon_sampled).collect();
            let hy: Vec<_> = y.record.iterations.iter().map(|i| i.horizon_sampled).collect();
            assert_eq!(hx, hy);
        }
    }

    #[test]
    fn identical_configs_give_identical_curves() {
        let cmp = run_comparison(&small(), &small()).unwrap();
        for p in &cmp.curves {
            assert_eq!(p.first_mean, p.second_mean);
            assert_eq!(p.first_std, p.second_std);
        }
    }

    #[test]
    fn comparison_rejects_mismatch() {
        let a = small();
        let b = TrainConfig {
            seeds: vec![9],
            ..small()
        };
        assert!(run_comparison(&a, &b).is_err());
        let c = TrainConfig { gamma: 0.9, ..small() };
        assert!(run_comparison(&a, &c).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { gamma: 1.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { sigma: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { max_steps: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { phi: -1.0, ..Default::default() }.validate().is_err());
    }
}
