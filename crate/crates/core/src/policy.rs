//! Heavy-tailed (Cauchy) and light-tailed (Gaussian) stochastic policies.
//!
//! Both families place an independent location/scale distribution on every
//! action dimension. The location is the approximator output `μ(s)`; the
//! scale `σ` is fixed for the lifetime of the policy (the Cauchy scale, or
//! the Gaussian standard deviation).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::approximator::ApproximatorSpec;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const ACTION_DIM: usize = 2;

pub type Action = [f64; ACTION_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Cauchy,
    Gaussian,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cauchy => "cauchy",
            Family::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cauchy" => Ok(Family::Cauchy),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            other => Err(Error::config("family", format!("unknown family `{other}`"))),
        }
    }
}

impl Family {
    /// Log density of a single dimension at offset `x = a - μ`.
    pub fn log_density_1d(self, x: f64, sigma: f64) -> f64 {
        match self {
            Family::Cauchy => {
                let z = x / sigma;
                -(sigma * PI).ln() - z.mul_add(z, 1.0).ln()
            }
            Family::Gaussian => {
                -0.5 * (2.0 * PI * sigma * sigma).ln() - x * x / (2.0 * sigma * sigma)
            }
        }
    }

    /// ∂ log f / ∂μ at offset `x = a - μ`.
    pub fn location_score(self, x: f64, sigma: f64) -> f64 {
        match self {
            Family::Cauchy => 2.0 * x / (sigma * sigma + x * x),
            Family::Gaussian => x / (sigma * sigma),
        }
    }

    /// Draws `μ + σ·ξ` with ξ from the standard member of the family.
    /// Cauchy draws use the inverse CDF `tan(π(u − ½))` on an open-interval uniform.
    pub fn sample_1d(self, mu: f64, sigma: f64, rng: &mut Rng) -> f64 {
        let xi = match self {
            Family::Cauchy => {
                let u: f64 = rng.sample(Open01);
                (PI * (u - 0.5)).tan()
            }
            Family::Gaussian => rng.sample::<f64, _>(StandardNormal),
        };
        sigma.mul_add(xi, mu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParameters {
    pub spec: ApproximatorSpec,
    pub weights: Vec<f64>,
    pub sigma: f64,
    pub family: Family,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub raw: Action,
    pub projected: Action,
    pub log_density: f64,
}

/// Component-wise clamp into the ∞-norm ball of radius `delta`.
pub fn project_action(raw: Action, delta: f64) -> Action {
    raw.map(|a| a.clamp(-delta, delta))
}

impl PolicyParameters {
    pub fn new(spec: ApproximatorSpec, weights: Vec<f64>, sigma: f64, family: Family) -> Result<Self> {
        let params = Self {
            spec,
            weights,
            sigma,
            family,
        };
        params.validate()?;
        Ok(params)
    }

    /// A policy with freshly initialized weights (zero location everywhere).
    pub fn initialize(spec: ApproximatorSpec, sigma: f64, family: Family, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        let weights = spec.init_weights(rng);
        Self::new(spec, weights, sigma, family)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.spec.output_dim != ACTION_DIM {
            return Err(Error::config(
                "spec.output_dim",
                format!("policy actions are {ACTION_DIM}-dimensional"),
            ));
        }
        let expected = self.spec.weight_count();
        if self.weights.len() != expected {
            return Err(Error::Dimension {
                what: "policy weights",
                expected,
                got: self.weights.len(),
            });
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn forward_mean(&self, obs: &[f64]) -> Result<Action> {
        let out = self.spec.forward(&self.weights, obs)?;
        Ok([out[0], out[1]])
    }

    pub fn sample_action(&self, obs: &[f64], delta: f64, rng: &mut Rng) -> Result<ActionSample> {
        let mu = self.forward_mean(obs)?;
        let raw = mu.map(|m| self.family.sample_1d(m, self.sigma, rng));
        Ok(ActionSample {
            raw,
            projected: project_action(raw, delta),
            log_density: self.log_density_at(mu, raw),
        })
    }

    fn log_density_at(&self, mu: Action, action: Action) -> f64 {
        mu.iter()
            .zip(&action)
            .map(|(m, a)| self.family.log_density_1d(a - m, self.sigma))
            .sum()
    }

    pub fn log_density(&self, obs: &[f64], action: Action) -> Result<f64> {
        Ok(self.log_density_at(self.forward_mean(obs)?, action))
    }

    /// ∇_θ log π_θ(action | obs), back-propagated through the approximator.
    pub fn score(&self, obs: &[f64], action: Action) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.weights.len()];
        self.score_into(obs, action, &mut grad)?;
        Ok(grad)
    }

    pub fn score_into(&self, obs: &[f64], action: Action, out: &mut [f64]) -> Result<()> {
        let trace = self.spec.forward_trace(&self.weights, obs)?;
        let mu = trace.output();
        let upstream: Vec<f64> = mu
            .iter()
            .zip(&action)
            .map(|(m, a)| self.family.location_score(a - m, self.sigma))
            .collect();
        self.spec.backward(&self.weights, &trace, &upstream, out);
        Ok(())
    }
}
