//! Surrogate objective, Fisher-vector products, conjugate gradient and the
//! KL-constrained backtracking line search.

use ndarray::{Array1, ArrayView1};

use super::rollout::RolloutBatch;
use crate::error::{Error, Result};
use crate::par::Executor;
use crate::policy::{kl_sum, rows_view, ForwardCache, GaussianMlpPolicy};

/// Rows per work item for batched policy passes. Fixed so that reductions
/// happen in the same order for any worker count.
pub const CHUNK_ROWS: usize = 1024;

fn chunks(rows: usize) -> Vec<(usize, usize)> {
    (0..rows)
        .step_by(CHUNK_ROWS)
        .map(|s| (s, (s + CHUNK_ROWS).min(rows)))
        .collect()
}

fn sum_into(acc: &mut [f64], part: &[f64]) {
    acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_advantages(batch: &RolloutBatch, advantages: &[f64]) -> Result<()> {
    if advantages.len() != batch.len() {
        return Err(Error::invalid("advantages length does not match batch"));
    }
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    Ok(())
}

/// Importance-weighted surrogate `mean_t[exp(logp_new - logp_old) * A_t]`
/// evaluated at `policy`, with its gradient evaluated at the same point.
///
/// At the collecting policy the ratios are 1, so the loss is `mean(A)` and
/// the gradient is `mean_t[A_t * grad log pi(a_t | s_t)]`.
pub fn surrogate_and_grad(
    batch: &RolloutBatch,
    policy: &GaussianMlpPolicy,
    advantages: &[f64],
    exec: &Executor,
) -> Result<(f64, Vec<f64>)> {
    check_advantages(batch, advantages)?;
    let parts = chunks(batch.len());
    let results = exec.map(parts.len(), |c| {
        let (s, e) = parts[c];
        let states = rows_view(&batch.states, batch.state_dim, s, e);
        let actions = rows_view(&batch.actions, batch.action_dim, s, e);
        let means = policy.forward_batch(states);
        let mut loss = 0.0;
        let mut weights = Array1::zeros(e - s);
        for (k, row) in (s..e).enumerate() {
            let lp = log_prob_row(means.row(k), policy.log_std, actions.row(k));
            let w = (lp - batch.log_probs[row]).exp() * advantages[row];
            loss += w;
            weights[k] = w;
        }
        (
            loss,
            policy.grad_weighted_log_prob(states, actions, weights.view()),
        )
    });
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; policy.num_params()];
    for (l, g) in &results {
        loss += l;
        sum_into(&mut grad, g);
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

fn log_prob_row(mean: ArrayView1<f64>, log_std: f64, action: ArrayView1<f64>) -> f64 {
    let var = (2.0 * log_std).exp();
    let dim = mean.len() as f64;
    let sq: f64 = mean
        .iter()
        .zip(action.iter())
        .map(|(m, a)| (a - m) * (a - m))
        .sum();
    -sq / (2.0 * var) - dim * log_std - 0.5 * dim * (2.0 * std::f64::consts::PI).ln()
}

/// Damped Hessian of the mean KL divergence from a fixed policy, evaluated at
/// that policy, with the forward activations of every batch state cached.
///
/// At `new == old` the mean difference vanishes, so the Hessian reduces to
/// `J^T J / sigma^2` for the network parameters (`J` the Jacobian of the mean
/// action) and `2 * action_dim` for `log_std`, with no cross terms. Products
/// are formed as a Jacobian-vector product followed by backprop.
pub struct FisherOperator<'a> {
    policy: &'a GaussianMlpPolicy,
    caches: Vec<ForwardCache>,
    rows: usize,
    damping: f64,
    exec: &'a Executor,
}

impl<'a> FisherOperator<'a> {
    pub fn new(
        policy: &'a GaussianMlpPolicy,
        batch: &RolloutBatch,
        damping: f64,
        exec: &'a Executor,
    ) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let parts = chunks(batch.len());
        let caches = exec.map(parts.len(), |c| {
            let (s, e) = parts[c];
            policy.forward_cached(rows_view(&batch.states, batch.state_dim, s, e))
        });
        Ok(FisherOperator {
            policy,
            caches,
            rows: batch.len(),
            damping,
            exec,
        })
    }

    pub fn policy(&self) -> &GaussianMlpPolicy {
        self.policy
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// `H v + damping * v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let p = self.policy;
        let inv_var = (-2.0 * p.log_std).exp();
        let parts = self.exec.map(self.caches.len(), |c| {
            let cache = &self.caches[c];
            let mut jv = p.jvp(cache, v);
            jv.mapv_inplace(|x| x * inv_var);
            p.backward(cache, jv.view())
        });
        let mut out = vec![0.0; v.len()];
        for part in &parts {
            sum_into(&mut out, part);
        }
        let n = self.rows as f64;
        out.iter_mut().for_each(|o| *o /= n);
        let last = out.len() - 1;
        out[last] = 2.0 * p.output_dim() as f64 * v[last];
        out.iter_mut()
            .zip(v)
            .for_each(|(o, x)| *o += self.damping * x);
        out
    }

    /// Surrogate value and mean KL from the cached policy for a candidate.
    fn evaluate(
        &self,
        batch: &RolloutBatch,
        advantages: &[f64],
        candidate: &GaussianMlpPolicy,
    ) -> (f64, f64) {
        let parts = chunks(self.rows);
        let results = self.exec.map(parts.len(), |c| {
            let (s, e) = parts[c];
            let states = rows_view(&batch.states, batch.state_dim, s, e);
            let actions = rows_view(&batch.actions, batch.action_dim, s, e);
            let means = candidate.forward_batch(states);
            let mut surr = 0.0;
            for (k, row) in (s..e).enumerate() {
                let lp = log_prob_row(means.row(k), candidate.log_std, actions.row(k));
                surr += (lp - batch.log_probs[row]).exp() * advantages[row];
            }
            let kl = kl_sum(
                self.caches[c].mean.view(),
                self.policy.log_std,
                means.view(),
                candidate.log_std,
            );
            (surr, kl)
        });
        let n = self.rows as f64;
        let (surr, kl) = results
            .iter()
            .fold((0.0, 0.0), |(a, b), (s, k)| (a + s, b + k));
        (surr / n, kl / n)
    }
}

/// `H v + damping * v` for the KL Hessian at `policy` over the batch states.
pub fn fisher_vector_product(
    batch: &RolloutBatch,
    policy: &GaussianMlpPolicy,
    v: &[f64],
    damping: f64,
    exec: &Executor,
) -> Result<Vec<f64>> {
    if v.len() != policy.num_params() {
        return Err(Error::invalid(
            "vector length does not match parameter count",
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite vector"));
    }
    Ok(FisherOperator::new(policy, batch, damping, exec)?.apply(v))
}

/// Solves `A x = b` for symmetric positive definite `A` given as an operator,
/// starting from `x = 0`. Stops after `iters` iterations or once the residual
/// norm drops below `tol`.
pub fn conjugate_gradient<F>(mut apply_a: F, b: &[f64], iters: usize, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    if !rr.is_finite() {
        return Err(Error::Numeric(
            "conjugate gradient: non-finite right-hand side".into(),
        ));
    }
    for _ in 0..iters {
        if rr.sqrt() < tol {
            break;
        }
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        let alpha = rr / pap;
        if !alpha.is_finite() {
            return Err(Error::Numeric(format!(
                "conjugate gradient: p^T A p = {pap}"
            )));
        }
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(Error::Numeric(
                "conjugate gradient: non-finite residual".into(),
            ));
        }
        let beta = rr_new / rr;
        p.iter_mut()
            .zip(&r)
            .for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LineSearchStats {
    /// Mean KL of the accepted step (0 when rejected).
    pub kl: f64,
    /// Surrogate gain of the accepted step (0 when rejected).
    pub improvement: f64,
    /// Step halvings before acceptance, or the full budget when rejected.
    pub backtracks: usize,
}

/// Backtracking search along `direction`, starting from the step that meets
/// the KL bound under the quadratic model, `sqrt(2 delta / d^T H d) * d`.
/// Accepts the first candidate with positive surrogate gain and mean KL at
/// most `delta`; otherwise returns the old policy unchanged.
pub fn line_search(
    fisher: &FisherOperator<'_>,
    batch: &RolloutBatch,
    advantages: &[f64],
    direction: &[f64],
    max_kl: f64,
    backtracks: usize,
    ratio: f64,
) -> Result<(GaussianMlpPolicy, bool, LineSearchStats)> {
    check_advantages(batch, advantages)?;
    let old = fisher.policy();
    let rejected = LineSearchStats {
        backtracks,
        ..Default::default()
    };
    if direction.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("non-finite search direction"));
    }
    let curvature = dot(direction, &fisher.apply(direction));
    if !(curvature > 0.0 && curvature.is_finite()) {
        return Ok((old.clone(), false, rejected));
    }
    let step = (2.0 * max_kl / curvature).sqrt();
    let (base, _) = fisher.evaluate(batch, advantages, old);
    let mut frac = 1.0;
    for k in 0..backtracks {
        let candidate = old.stepped(direction, frac * step)?;
        let (surr, kl) = fisher.evaluate(batch, advantages, &candidate);
        let improvement = surr - base;
        if improvement > 0.0 && kl <= max_kl {
            return Ok((
                candidate,
                true,
                LineSearchStats {
                    kl,
                    improvement,
                    backtracks: k,
                },
            ));
        }
        frac *= ratio;
    }
    Ok((old.clone(), false, rejected))
}
