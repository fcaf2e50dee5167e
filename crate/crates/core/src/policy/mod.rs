//! Gaussian MLP policy: forward pass, sampling, log-density and its exact
//! gradient, KL divergence between parameter snapshots and checkpoints.

mod checkpoint;
mod gaussian;
mod mlp;

pub use checkpoint::{from_bytes, load_policy, save_policy, to_bytes};
pub use gaussian::{gaussian_kl, log_prob, mean_kl, sample_action};
pub use mlp::{
    init_policy, ForwardCache, GaussianMlpPolicy, Layer, DEFAULT_HIDDEN, OUTPUT_INIT_SCALE,
};

pub(crate) use gaussian::kl_sum;
pub(crate) use mlp::rows_view;
