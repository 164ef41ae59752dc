//! Heavy-tailed policy-gradient training for sparse-reward robot navigation.
//!
//! The crate bundles a Cauchy/Gaussian policy over a small feedforward
//! approximator, a random-horizon REINFORCE-style gradient estimator with
//! ∞-norm clipping, an adaptive-moment ascent optimizer, and a deterministic
//! 2.5D differential-drive simulator with three sparse-reward scenarios
//! (goal reaching, obstacle avoidance, uneven terrain).

pub mod approximator;
pub mod env;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod io;
pub mod optimizer;
pub mod policy;
pub mod rewards;
pub mod rng;
pub mod trainer;
pub mod trajectory;

pub use approximator::{Activation, ApproximatorSpec};
pub use env::{generate_world, GenerationKnobs, NavEnv, RobotPose, Scenario, World};
pub use error::{Error, Result};
pub use estimator::{clip_gradient, estimate_gradient, sample_horizon, GradientEstimate};
pub use eval::{elevation_cost, evaluate, EvalMode, EvalReport};
pub use io::Checkpoint;
pub use optimizer::{OptimizerConfig, OptimizerState};
pub use policy::{project_action, Action, ActionSample, Family, PolicyParameters};
pub use rewards::{RewardComponents, RewardConfig};
pub use trainer::{rollout, run_comparison, train, RunRecord, TrainConfig};
pub use trajectory::{TerminationCause, Trajectory};
