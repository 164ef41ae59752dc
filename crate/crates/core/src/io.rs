//! Keyed text documents: training configs and checkpoints (TOML).
//!
//! Checkpoint keys:
//!
//! | key          | content                                              |
//! |--------------|------------------------------------------------------|
//! | `format`     | `"heavytail-checkpoint/1"`                           |
//! | `family`     | `"cauchy"` or `"gaussian"`                           |
//! | `sigma`      | fixed policy scale                                   |
//! | `weights`    | flat approximator weights, layer-major               |
//! | `[spec]`     | `input_dim`, `hidden_layers`, `activation`, `output_dim` |
//! | `[optimizer]`| optional: `m`, `v`, `step_count`, `[optimizer.config]` |

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::approximator::ApproximatorSpec;
use crate::env::observation_dim;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerState;
use crate::policy::{Family, PolicyParameters};
use crate::trainer::TrainConfig;

pub const CHECKPOINT_FORMAT: &str = "heavytail-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub family: Family,
    pub sigma: f64,
    pub weights: Vec<f64>,
    pub spec: ApproximatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerState>,
}

fn parse_error(what: &str, e: impl ToString) -> Error {
    Error::Parse {
        what: what.into(),
        message: e.to_string(),
    }
}

impl Checkpoint {
    pub fn new(params: &PolicyParameters, optimizer: Option<&OptimizerState>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            family: params.family,
            sigma: params.sigma,
            weights: params.weights.clone(),
            spec: params.spec.clone(),
            optimizer: optimizer.cloned(),
        }
    }

    pub fn params(&self) -> Result<PolicyParameters> {
        PolicyParameters::new(self.spec.clone(), self.weights.clone(), self.sigma, self.family)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| parse_error("checkpoint", e))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let ck: Checkpoint = toml::from_str(s).map_err(|e| parse_error("checkpoint", e))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(parse_error("checkpoint", format!("unsupported format `{}`", ck.format)));
        }
        ck.params()?;
        if let Some(opt) = &ck.optimizer {
            if opt.m.len() != ck.weights.len() || opt.v.len() != ck.weights.len() {
                return Err(parse_error("checkpoint", "optimizer moments do not match the weights"));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// Checks the checkpoint can drive a policy under `cfg`.
    pub fn ensure_compatible(&self, cfg: &TrainConfig) -> Result<()> {
        let dim = observation_dim(cfg.scenario);
        if self.spec.input_dim != dim {
            return Err(Error::Mismatch(format!(
                "checkpoint expects {}-dimensional observations, scenario {} produces {dim}",
                self.spec.input_dim, cfg.scenario
            )));
        }
        if self.family != cfg.family {
            return Err(Error::Mismatch(format!(
                "checkpoint family {} differs from configured family {}",
                self.family, cfg.family
            )));
        }
        Ok(())
    }
}

impl TrainConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(s).map_err(|e| parse_error("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| parse_error("config", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::OptimizerConfig;
    use crate::rng::seeded;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let spec = ApproximatorSpec::mlp(4, vec![16], 2);
        let mut params = PolicyParameters::initialize(spec, 0.25, Family::Gaussian, &mut seeded(3)).unwrap();
        params.weights.iter_mut().enumerate().for_each(|(i, w)| *w += (i as f64).sqrt() * 1e-7);
        let mut opt = OptimizerState::new(OptimizerConfig::default(), params.weights.len());
        opt.step(&mut params.weights.clone(), &vec![0.3; params.weights.len()]).unwrap();
        let ck = Checkpoint::new(&params, Some(&opt));
        let back = Checkpoint::from_toml_str(&ck.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.params().unwrap(), params);
    }

    #[test]
    fn corrupted_checkpoint_is_rejected() {
        let spec = ApproximatorSpec::linear(4, 2);
        let params = PolicyParameters::new(spec, vec![0.5; 8], 0.25, Family::Cauchy).unwrap();
        let text = Checkpoint::new(&params, None).to_toml_string().unwrap();
        assert!(Checkpoint::from_toml_str(&text[..text.len() / 2]).is_err());
        assert!(Checkpoint::from_toml_str(&text.replace("sigma = 0.25", "sigma = -1.0")).is_err());
        assert!(Checkpoint::from_toml_str(&text.replace(CHECKPOINT_FORMAT, "other/2")).is_err());
    }

    #[test]
    fn compatibility_checks() {
        let cfg = TrainConfig::default();
        let ck = Checkpoint::new(&cfg.initial_policy(0).unwrap(), None);
        ck.ensure_compatible(&cfg).unwrap();
        let other = TrainConfig {
            scenario: crate::env::Scenario::UnevenTerrain,
            ..TrainConfig::default()
        };
        assert!(matches!(ck.ensure_compatible(&other), Err(Error::Mismatch(_))));
        let gauss = TrainConfig {
            family: Family::Gaussian,
            ..TrainConfig::default()
        };
        assert!(ck.ensure_compatible(&gauss).is_err());
    }

    #[test]
    fn config_round_trip_and_partial_documents() {
        let cfg = TrainConfig::default();
        assert_eq!(TrainConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);

        let partial = "scenario = \"uneven_terrain\"\nepisodes = 7\n[optimizer]\neta = 0.05\n";
        let parsed = TrainConfig::from_toml_str(partial).unwrap();
        assert_eq!(parsed.episodes, 7);
        assert_eq!(parsed.optimizer.eta, 0.05);
        assert_eq!(parsed.optimizer.beta1, 0.9);
        assert_eq!(parsed.gamma, 0.99);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = TrainConfig::from_toml_str("gamma = 1.5").unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
        let err = TrainConfig::from_toml_str("episodes = \"many\"").unwrap_err().to_string();
        assert!(err.contains("episodes"), "{err}");
    }
}
