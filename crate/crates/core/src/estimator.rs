//! Random-horizon policy-gradient estimator and gradient clipping.

use rand::Rng as _;
use rand_distr::Geometric;

use crate::error::{Error, Result};
use crate::policy::PolicyParameters;
use crate::rng::Rng;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub raw: Vec<f64>,
    pub clipped: Vec<f64>,
    pub horizon_sampled: u64,
    pub horizon_used: u64,
}

impl GradientEstimate {
    pub fn new(raw: Vec<f64>, phi: f64, horizon_sampled: u64, horizon_used: u64) -> Self {
        let clipped = clip_gradient(&raw, phi);
        Self {
            raw,
            clipped,
            horizon_sampled,
            horizon_used,
        }
    }
}

pub fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::config("gamma", format!("must lie in (0, 1), got {gamma}")))
    }
}

/// Draws `T ~ Geom(1 − √γ)` on the support `{0, 1, 2, …}`.
pub fn sample_horizon(gamma: f64, rng: &mut Rng) -> Result<u64> {
    check_gamma(gamma)?;
    let p = 1.0 - gamma.sqrt();
    let dist = Geometric::new(p).map_err(|e| Error::config("gamma", e.to_string()))?;
    Ok(rng.sample(dist))
}

/// `Σ_t γ^{t/2} r_t · Σ_{τ≤t} ∇log π(a_τ|s_τ)` over the recorded steps.
///
/// Steps the trajectory does not contain (after termination or truncation)
/// are absorbing and contribute nothing.
pub fn estimate_gradient(params: &PolicyParameters, trajectory: &Trajectory, gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if trajectory.steps.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let n = params.weights.len();
    let mut grad = vec![0.0; n];
    let mut cumulative_score = vec![0.0; n];
    let mut step_score = vec![0.0; n];
    let discount_root = gamma.sqrt();
    let mut discount = 1.0;

    for step in &trajectory.steps {
        params.score_into(&step.features, step.raw, &mut step_score)?;
        for (c, s) in cumulative_score.iter_mut().zip(&step_score) {
            *c += s;
        }
        let weight = discount * step.rewards.total;
        if weight != 0.0 {
            for (g, c) in grad.iter_mut().zip(&cumulative_score) {
                *g += weight * c;
            }
        }
        discount *= discount_root;
    }
    Ok(grad)
}

/// Component-wise clamp into `[-phi, phi]`.
pub fn clip_gradient(g: &[f64], phi: f64) -> Vec<f64> {
    g.iter().map(|x| x.clamp(-phi, phi)).collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
