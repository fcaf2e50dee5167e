use nalgebra::{DMatrix, DVector};

use super::rollout::RolloutBatch;
use crate::error::{Error, Result};

pub const RIDGE: f64 = 1e-5;

/// Linear value baseline over the features
/// `[s, s*s, t/T, (t/T)^2, (t/T)^3, 1]`, fitted by ridge regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearBaseline {
    pub coeffs: Vec<f64>,
    pub max_episode_len: usize,
}

pub fn features(state: &[f64], t: usize, max_episode_len: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(state);
    out.extend(state.iter().map(|s| s * s));
    let tau = t as f64 / max_episode_len as f64;
    out.extend_from_slice(&[tau, tau * tau, tau * tau * tau, 1.0]);
}

impl LinearBaseline {
    pub fn fit(batch: &RolloutBatch, returns: &[f64], max_episode_len: usize) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::invalid("cannot fit a baseline to an empty batch"));
        }
        if returns.len() != batch.len() {
            return Err(Error::invalid("returns length does not match batch"));
        }
        let width = 2 * batch.state_dim + 4;
        let mut gram = DMatrix::<f64>::zeros(width, width);
        let mut rhs = DVector::<f64>::zeros(width);
        let mut phi = Vec::with_capacity(width);
        for (row, &g) in returns.iter().enumerate() {
            features(
                batch.state(row),
                batch.timesteps[row],
                max_episode_len,
                &mut phi,
            );
            let v = DVector::from_column_slice(&phi);
            gram.ger(1.0, &v, &v, 1.0);
            rhs.axpy(g, &v, 1.0);
        }
        for k in 0..width {
            gram[(k, k)] += RIDGE;
        }
        let coeffs = gram
            .cholesky()
            .ok_or_else(|| {
                Error::Numeric("baseline normal equations not positive definite".into())
            })?
            .solve(&rhs);
        Ok(LinearBaseline {
            coeffs: coeffs.iter().copied().collect(),
            max_episode_len,
        })
    }

    pub fn predict(&self, state: &[f64], t: usize) -> f64 {
        let mut phi = Vec::with_capacity(self.coeffs.len());
        features(state, t, self.max_episode_len, &mut phi);
        phi.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    /// `returns[t] - b(s_t, t)` for every row of the batch.
    pub fn advantages(&self, batch: &RolloutBatch, returns: &[f64]) -> Vec<f64> {
        returns
            .iter()
            .enumerate()
            .map(|(row, g)| g - self.predict(batch.state(row), batch.timesteps[row]))
            .collect()
    }
}
