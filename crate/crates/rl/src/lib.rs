//! Reinforcement-learning layer: the single-step scenario-selection MDP,
//! its solver-feedback reward, parallel rollouts, and clipped-surrogate
//! PPO updates with a persistent Adam state.

mod env;
mod experience;
mod ppo;
mod reward;
mod rollout;

pub use env::{env_step, EnvInstance, EnvStepOutcome};
pub use experience::Experience;
pub use ppo::{ppo_update, PpoConfig, PpoStats, PpoUpdater};
pub use reward::{compute_match, compute_reward, work_time, RewardConfig};
pub use rollout::{derive_seed, rollout};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("instance has no cached optimum; generate with caching enabled")]
    MissingOptimum,
    #[error("non-finite loss in update epoch {epoch}, minibatch {minibatch}")]
    NonFiniteLoss { epoch: usize, minibatch: usize },
    #[error(transparent)]
    Core(#[from] scenred_core::CoreError),
    #[error(transparent)]
    Graph(#[from] scenred_graphs::GraphError),
    #[error(transparent)]
    Nn(#[from] scenred_nn::NnError),
}
