use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::baseline::LinearBaseline;
use super::optim::{conjugate_gradient, line_search, surrogate_and_grad, FisherOperator};
use super::returns::{batch_returns, normalize};
use super::rollout::{collect_rollouts, RolloutBatch};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::par::Executor;
use crate::policy::{init_policy, save_policy, GaussianMlpPolicy, DEFAULT_HIDDEN};

pub const METRICS_HEADER: &str = "iter,mean_disc_return,mean_return,mean_ep_len,near_collisions,total_travel_time,kl,surrogate_improvement,backtracks";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Advantages are raw discounted returns.
    None,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_steps: usize,
    pub n_iterations: usize,
    /// Trust-region radius on the mean KL divergence.
    pub kl_step: f64,
    pub cg_iters: usize,
    pub cg_damping: f64,
    pub cg_tol: f64,
    pub backtracks: usize,
    pub backtrack_ratio: f64,
    pub advantage_normalization: bool,
    pub baseline: BaselineKind,
    /// Train the shared log standard deviation along with the network.
    pub learn_std: bool,
    /// Initial action standard deviation; `None` means `0.3 * a_max`.
    pub init_std: Option<f64>,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Write `policy_iter_<k>.bin` every this many iterations (0 disables).
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_steps: 10_000,
            n_iterations: 300,
            kl_step: 0.01,
            cg_iters: 10,
            cg_damping: 0.1,
            cg_tol: 1e-10,
            backtracks: 10,
            backtrack_ratio: 0.5,
            advantage_normalization: true,
            baseline: BaselineKind::Linear,
            learn_std: true,
            init_std: None,
            hidden: DEFAULT_HIDDEN.to_vec(),
            seed: 0,
            checkpoint_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kl_step > 0.0 && self.kl_step.is_finite()) {
            return Err(Error::invalid("kl_step must be > 0"));
        }
        if self.cg_iters < 1 {
            return Err(Error::invalid("cg_iters must be >= 1"));
        }
        if !(self.backtrack_ratio > 0.0 && self.backtrack_ratio < 1.0) {
            return Err(Error::invalid("backtrack_ratio must be in (0, 1)"));
        }
        if self.batch_steps < 1 {
            return Err(Error::invalid("batch_steps must be >= 1"));
        }
        if self.cg_damping < 0.0 {
            return Err(Error::invalid("cg_damping must be >= 0"));
        }
        if let Some(std) = self.init_std {
            if !(std > 0.0 && std.is_finite()) {
                return Err(Error::invalid("init_std must be > 0"));
            }
        }
        Ok(())
    }

    pub fn initial_std(&self, a_max: f64) -> f64 {
        self.init_std.unwrap_or(0.3 * a_max)
    }
}

/// One row of the metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub iter: usize,
    pub mean_disc_return: f64,
    pub mean_return: f64,
    pub mean_ep_len: f64,
    pub near_collisions: usize,
    /// Mean over episodes of the travel time summed over vehicles.
    pub total_travel_time: f64,
    pub kl: f64,
    pub surrogate_improvement: f64,
    pub backtracks: usize,
    pub accepted: bool,
}

impl IterationStats {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            fmt_f64(self.mean_disc_return),
            fmt_f64(self.mean_return),
            fmt_f64(self.mean_ep_len),
            self.near_collisions,
            fmt_f64(self.total_travel_time),
            fmt_f64(self.kl),
            fmt_f64(self.surrogate_improvement),
            self.backtracks
        )
    }
}

/// SplitMix64 finalizer; derives independent seeds from `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Policy-optimization loop state. Each [`Trainer::iterate`] collects a batch
/// with the current policy, estimates advantages, solves for the natural
/// gradient direction and takes a KL-bounded step.
pub struct Trainer<'a> {
    env: &'a Env,
    config: TrainConfig,
    exec: &'a Executor,
    policy: GaussianMlpPolicy,
    iter: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(env: &'a Env, config: TrainConfig, exec: &'a Executor) -> Result<Self> {
        config.validate()?;
        let policy = init_policy(
            env.n_vehicles(),
            &config.hidden,
            config.seed,
            config.initial_std(env.config().a_max),
        )?;
        Ok(Trainer {
            env,
            config,
            exec,
            policy,
            iter: 0,
        })
    }

    pub fn with_policy(mut self, policy: GaussianMlpPolicy) -> Result<Self> {
        if policy.input_dim() != self.env.state_dim()
            || policy.output_dim() != self.env.action_dim()
        {
            return Err(Error::invalid(
                "policy dimensions do not match the environment",
            ));
        }
        self.policy = policy;
        Ok(self)
    }

    pub fn policy(&self) -> &GaussianMlpPolicy {
        &self.policy
    }

    pub fn into_policy(self) -> GaussianMlpPolicy {
        self.policy
    }

    /// Advantages for `batch` under the configured baseline and normalization.
    pub fn advantages(&self, batch: &RolloutBatch) -> Result<(Vec<f64>, Vec<f64>)> {
        let returns = batch_returns(batch, self.env.config().gamma);
        let mut adv = match self.config.baseline {
            BaselineKind::None => returns.clone(),
            BaselineKind::Linear => {
                LinearBaseline::fit(batch, &returns, self.env.config().max_episode_len)?
                    .advantages(batch, &returns)
            }
        };
        if self.config.advantage_normalization {
            normalize(&mut adv);
        }
        Ok((returns, adv))
    }

    pub fn iterate(&mut self) -> Result<IterationStats> {
        let cfg = &self.config;
        let seed = derive_seed(cfg.seed, self.iter as u64);
        let batch = collect_rollouts(self.env, &self.policy, cfg.batch_steps, seed, self.exec)?;
        let (returns, adv) = self.advantages(&batch)?;

        let (_, mut grad) = surrogate_and_grad(&batch, &self.policy, &adv, self.exec)?;
        if !cfg.learn_std {
            *grad.last_mut().expect("log_std slot") = 0.0;
        }
        let fisher = FisherOperator::new(&self.policy, &batch, cfg.cg_damping, self.exec)?;
        let direction = conjugate_gradient(|v| fisher.apply(v), &grad, cfg.cg_iters, cfg.cg_tol)?;
        let (next, accepted, ls) = line_search(
            &fisher,
            &batch,
            &adv,
            &direction,
            cfg.kl_step,
            cfg.backtracks,
            cfg.backtrack_ratio,
        )?;

        let episodes = batch.n_episodes() as f64;
        let mut disc = 0.0;
        let mut undisc = 0.0;
        for k in 0..batch.n_episodes() {
            let range = batch.episode(k);
            disc += returns[range.start];
            undisc += batch.rewards[range].iter().sum::<f64>();
        }
        let stats = IterationStats {
            iter: self.iter,
            mean_disc_return: disc / episodes,
            mean_return: undisc / episodes,
            mean_ep_len: batch.len() as f64 / episodes,
            near_collisions: batch.near_collisions(),
            total_travel_time: batch.travel_times.iter().sum::<f64>() / episodes,
            kl: ls.kl,
            surrogate_improvement: ls.improvement,
            backtracks: ls.backtracks,
            accepted,
        };
        if accepted {
            self.policy = next;
        }
        self.iter += 1;
        Ok(stats)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: GaussianMlpPolicy,
    pub stats: Vec<IterationStats>,
    pub metrics_path: PathBuf,
    pub final_checkpoint: PathBuf,
}

/// Runs `n_iterations` of training, writing `metrics.csv`, periodic
/// `policy_iter_<k>.bin` checkpoints and `policy_final.bin` into `out_dir`.
/// `on_iter` sees every row as it is produced.
pub fn train<F>(
    env: &Env,
    config: &TrainConfig,
    out_dir: &Path,
    exec: &Executor,
    mut on_iter: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&IterationStats),
{
    let mut trainer = Trainer::new(env, config.clone(), exec)?;
    fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let mut metrics = BufWriter::new(File::create(&metrics_path)?);
    writeln!(metrics, "{METRICS_HEADER}")?;
    metrics.flush()?;

    let mut stats = Vec::with_capacity(config.n_iterations);
    for k in 0..config.n_iterations {
        let row = trainer.iterate()?;
        writeln!(metrics, "{}", row.csv_row())?;
        metrics.flush()?;
        on_iter(&row);
        stats.push(row);
        if config.checkpoint_every > 0 && (k + 1) % config.checkpoint_every == 0 {
            save_policy(
                trainer.policy(),
                out_dir.join(format!("policy_iter_{}.bin", k + 1)),
            )?;
        }
    }
    let final_checkpoint = out_dir.join("policy_final.bin");
    save_policy(trainer.policy(), &final_checkpoint)?;
    Ok(TrainOutcome {
        policy: trainer.into_policy(),
        stats,
        metrics_path,
        final_checkpoint,
    })
}
