use std::f64::consts::PI;

use ndarray::{ArrayView2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::GaussianMlpPolicy;
use crate::error::{Error, Result};

/// `mean + exp(log_std) * z` with `z` standard normal per component.
pub fn sample_action<R: Rng + ?Sized>(mean: &[f64], log_std: f64, rng: &mut R) -> Vec<f64> {
    let std = log_std.exp();
    mean.iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            m + std * z
        })
        .collect()
}

/// Log density of a diagonal Gaussian with shared standard deviation.
pub fn log_prob(mean: &[f64], log_std: f64, action: &[f64]) -> f64 {
    debug_assert_eq!(mean.len(), action.len());
    let var = (2.0 * log_std).exp();
    let dim = action.len() as f64;
    let sq: f64 = mean
        .iter()
        .zip(action)
        .map(|(m, a)| (a - m) * (a - m))
        .sum();
    -sq / (2.0 * var) - dim * log_std - 0.5 * dim * (2.0 * PI).ln()
}

/// `KL(old || new)` for two diagonal Gaussians with shared standard deviations.
pub fn gaussian_kl(mean_old: &[f64], log_std_old: f64, mean_new: &[f64], log_std_new: f64) -> f64 {
    let var_old = (2.0 * log_std_old).exp();
    let var_new = (2.0 * log_std_new).exp();
    mean_old
        .iter()
        .zip(mean_new)
        .map(|(mo, mn)| {
            log_std_new - log_std_old + (var_old + (mo - mn) * (mo - mn)) / (2.0 * var_new) - 0.5
        })
        .sum()
}

/// Batched sum over rows of `KL(old || new)`.
pub(crate) fn kl_sum(
    mean_old: ArrayView2<f64>,
    log_std_old: f64,
    mean_new: ArrayView2<f64>,
    log_std_new: f64,
) -> f64 {
    let var_old = (2.0 * log_std_old).exp();
    let var_new = (2.0 * log_std_new).exp();
    let mut sq = 0.0;
    Zip::from(mean_old)
        .and(mean_new)
        .for_each(|o, n| sq += (o - n) * (o - n));
    let count = mean_old.len() as f64;
    count * (log_std_new - log_std_old + var_old / (2.0 * var_new) - 0.5) + sq / (2.0 * var_new)
}

/// Mean over `states` (one per row) of `KL(old || new)` between the action
/// distributions of two policies.
pub fn mean_kl(
    old: &GaussianMlpPolicy,
    new: &GaussianMlpPolicy,
    states: ArrayView2<f64>,
) -> Result<f64> {
    if !old.same_architecture(new) {
        return Err(Error::invalid(
            "mean_kl: policies have different architectures",
        ));
    }
    if states.ncols() != old.input_dim() {
        return Err(Error::invalid("mean_kl: state width mismatch"));
    }
    if states.nrows() == 0 {
        return Ok(0.0);
    }
    let mo = old.forward_batch(states);
    let mn = new.forward_batch(states);
    Ok(kl_sum(mo.view(), old.log_std, mn.view(), new.log_std) / states.nrows() as f64)
}
