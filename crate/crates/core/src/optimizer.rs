//! Adaptive-moment ascent step.
//!
//! ```text
//! m ← β₁ m + (1 − β₁) g
//! v ← β₂ v + (1 − β₂) g²
//! θ ← θ + η m / (√v + ε)
//! ```
//!
//! The update climbs the objective. Bias correction is off by default and
//! can be enabled to get the conventional `m / (1 − β₁ᵏ)`, `v / (1 − β₂ᵏ)` form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub bias_correction: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            bias_correction: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::config("optimizer.eta", "must be non-negative"));
        }
        for (name, b) in [("optimizer.beta1", self.beta1), ("optimizer.beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("optimizer.epsilon", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, dim: usize) -> Self {
        Self {
            config,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step_count: 0,
        }
    }

    /// Applies one ascent step to `theta` in place using gradient `g`.
    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) -> Result<()> {
        let dim = self.m.len();
        for (what, len) in [("parameter vector", theta.len()), ("gradient", g.len())] {
            if len != dim {
                return Err(Error::Dimension {
                    what,
                    expected: dim,
                    got: len,
                });
            }
        }
        let OptimizerConfig {
            eta,
            beta1,
            beta2,
            epsilon,
            bias_correction,
        } = self.config;
        self.step_count += 1;
        let (c1, c2) = if bias_correction {
            let k = self.step_count as i32;
            (1.0 - beta1.powi(k), 1.0 - beta2.powi(k))
        } else {
            (1.0, 1.0)
        };

        for i in 0..dim {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] += eta * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_noop() {
        let mut s = OptimizerState::new(OptimizerConfig::default(), 3);
        let mut theta = vec![1.0, -2.0, 0.5];
        s.step(&mut theta, &[0.0; 3]).unwrap();
        assert_eq!(theta, vec![1.0, -2.0, 0.5]);
        assert!(s.m.iter().chain(&s.v).all(|&x| x == 0.0));
    }

    #[test]
    fn hand_computed_first_step() {
        let mut s = OptimizerState::new(OptimizerConfig::default(), 1);
        let mut theta = vec![0.7];
        s.step(&mut theta, &[1.0]).unwrap();
        assert!((s.m[0] - 0.1).abs() < 1e-15);
        assert!((s.v[0] - 0.001).abs() < 1e-15);
        assert!((theta[0] - 0.7 - 0.031_622_7).abs() < 1e-7);
    }

    #[test]
    fn zero_eta_still_updates_moments() {
        let cfg = OptimizerConfig {
            eta: 0.0,
            ..Default::default()
        };
        let mut s = OptimizerState::new(cfg, 2);
        let mut theta = vec![0.3, 0.4];
        s.step(&mut theta, &[2.0, -1.0]).unwrap();
        assert_eq!(theta, vec![0.3, 0.4]);
        assert!(s.m[0] > 0.0 && s.v[1] > 0.0);
    }

    #[test]
    fn bias_correction_first_step_is_unit_sign_step() {
        let cfg = OptimizerConfig {
            bias_correction: true,
            ..Default::default()
        };
        let mut s = OptimizerState::new(cfg, 1);
        let mut theta = vec![0.0];
        s.step(&mut theta, &[3.0]).unwrap();
        assert!((theta[0] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = OptimizerState::new(OptimizerConfig::default(), 2);
        assert!(s.step(&mut [0.0, 0.0], &[1.0]).is_err());
        assert!(s.step(&mut [0.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn fresh_step_follows_gradient_sign(g in prop::collection::vec(-100.0f64..100.0, 1..8)) {
            let cfg = OptimizerConfig::default();
            let mut s = OptimizerState::new(cfg, g.len());
            let mut theta = vec![0.0; g.len()];
            s.step(&mut theta, &g).unwrap();
            let bound = cfg.eta * (1.0 - cfg.beta1) / (1.0 - cfg.beta2).sqrt();
            for (t, gi) in theta.iter().zip(&g) {
                if *gi != 0.0 {
                    prop_assert_eq!(t.signum(), gi.signum());
                }
                prop_assert!(t.abs() <= bound + 1e-9);
                prop_assert!(s.v.iter().all(|&v| v >= 0.0));
            }
        }

        #[test]
        fn step_is_pure(g in prop::collection::vec(-10.0f64..10.0, 4), t0 in prop::collection::vec(-1.0f64..1.0, 4)) {
            let run = || {
                let mut s = OptimizerState::new(OptimizerConfig::default(), 4);
                let mut theta = t0.clone();
                s.step(&mut theta, &g).unwrap();
                s.step(&mut theta, &g).unwrap();
                (theta, s)
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn step_bounded_by_moment_over_epsilon(g in prop::collection::vec(-10.0f64..10.0, 3), g2 in prop::collection::vec(-10.0f64..10.0, 3)) {
            let cfg = OptimizerConfig::default();
            let mut s = OptimizerState::new(cfg, 3);
            let mut theta = vec![0.0; 3];
            s.step(&mut theta, &g).unwrap();
            let before = theta.clone();
            s.step(&mut theta, &g2).unwrap();
            let m_inf = s.m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (a, b) in theta.iter().zip(&before) {
                prop_assert!((a - b).abs() <= cfg.eta * m_inf / cfg.epsilon + 1e-12);
            }
        }
    }
}
