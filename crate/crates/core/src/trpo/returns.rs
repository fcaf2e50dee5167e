use super::rollout::RolloutBatch;

/// `G_t = r_t + gamma * G_{t+1}` with `G_{T-1} = r_{T-1}`; no bootstrap.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (g, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *g = acc;
    }
    out
}

/// Discounted returns of every row, computed episode by episode.
pub fn batch_returns(batch: &RolloutBatch, gamma: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(batch.len());
    for k in 0..batch.n_episodes() {
        out.extend(discounted_returns(&batch.rewards[batch.episode(k)], gamma));
    }
    out
}

/// Rescales `values` in place to zero mean and unit (population) standard
/// deviation. A constant input is only centered.
pub fn normalize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter_mut().for_each(|v| *v -= mean);
    let std = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    if std > 0.0 {
        values.iter_mut().for_each(|v| *v /= std);
    }
}
