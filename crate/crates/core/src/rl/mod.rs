//! Reinforcement-learning best-response oracles.

mod actor_critic;
mod config;
mod dqn;
mod replay;

pub use actor_critic::{
    actor_critic_gradients, actor_critic_update, train_actor_critic, AcGradients, AcOptimizer, AcStep,
};
pub use config::{EpsilonSchedule, TrainingConfig, Variant};
pub(crate) use dqn::sample_index;
pub use dqn::{
    compute_td_targets, train_dqn_best_response, write_curve_csv, CurvePoint, TdTarget, TrainedOracle, TrainingMode,
};
pub use replay::{ReplayBuffer, Transition};
