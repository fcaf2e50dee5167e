//! Trust-region policy optimization.
//!
//! One iteration: collect whole episodes with the current stochastic policy,
//! compute Monte Carlo returns, subtract a fitted baseline, solve
//! `H d = g` by conjugate gradient (`g` the policy gradient, `H` the KL
//! Hessian), then backtrack along `d` until the surrogate improves within the
//! KL radius.

mod baseline;
mod optim;
mod returns;
mod rollout;
mod train;

pub use baseline::{features, LinearBaseline, RIDGE};
pub use optim::{
    conjugate_gradient, dot, fisher_vector_product, line_search, surrogate_and_grad,
    FisherOperator, LineSearchStats, CHUNK_ROWS,
};
pub use returns::{batch_returns, discounted_returns, normalize};
pub use rollout::{collect_rollouts, episode_rng, RolloutBatch};
pub use train::{
    derive_seed, train, BaselineKind, IterationStats, TrainConfig, TrainOutcome, Trainer,
    METRICS_HEADER,
};
