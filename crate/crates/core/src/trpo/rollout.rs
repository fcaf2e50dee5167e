use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{run_episode, Env, Trajectory};
use crate::error::{Error, Result};
use crate::par::Executor;
use crate::policy::{log_prob, sample_action, GaussianMlpPolicy};

/// Whole episodes collected under one policy snapshot, stored as flat
/// row-major arrays (one row per step).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBatch {
    pub state_dim: usize,
    pub action_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Log-density of each action under the collecting policy.
    pub log_probs: Vec<f64>,
    /// Step index within the episode of each row's state.
    pub timesteps: Vec<usize>,
    /// Row offset of each episode's first step; strictly increasing.
    pub episode_starts: Vec<usize>,
    /// Per episode: reached the terminal state (as opposed to truncation).
    pub terminated: Vec<bool>,
    /// Per episode: travel time summed over vehicles.
    pub travel_times: Vec<f64>,
    pub boundary_events: usize,
    pub pair_events: usize,
    pub unresolved_events: usize,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn n_episodes(&self) -> usize {
        self.episode_starts.len()
    }

    /// Row range of episode `k`.
    pub fn episode(&self, k: usize) -> std::ops::Range<usize> {
        let end = self
            .episode_starts
            .get(k + 1)
            .copied()
            .unwrap_or(self.len());
        self.episode_starts[k]..end
    }

    pub fn state(&self, row: usize) -> &[f64] {
        &self.states[row * self.state_dim..(row + 1) * self.state_dim]
    }

    pub fn action(&self, row: usize) -> &[f64] {
        &self.actions[row * self.action_dim..(row + 1) * self.action_dim]
    }

    pub fn near_collisions(&self) -> usize {
        self.boundary_events + self.pair_events
    }

    fn push_episode(&mut self, env: &Env, traj: &Trajectory, log_probs: &[f64]) {
        self.episode_starts.push(self.len());
        for (k, action) in traj.actions.iter().enumerate() {
            let state = &traj.states[k];
            self.states.extend_from_slice(state.as_slice());
            self.actions.extend_from_slice(action);
            self.timesteps.push(state.t);
        }
        self.rewards.extend_from_slice(&traj.rewards);
        self.log_probs.extend_from_slice(log_probs);
        self.terminated.push(traj.done);
        self.travel_times.push(traj.total_travel_time(env));
        for ev in &traj.events {
            self.boundary_events += ev.boundary;
            self.pair_events += ev.pair;
            self.unresolved_events += ev.unresolved as usize;
        }
    }
}

/// Random stream for episode `index` of a batch: ChaCha8 keyed by `seed`, with
/// the episode index as the stream number.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn sample_episode(
    env: &Env,
    policy: &GaussianMlpPolicy,
    seed: u64,
    index: u64,
) -> Result<(Trajectory, Vec<f64>)> {
    let mut rng = episode_rng(seed, index);
    let mut log_probs = Vec::new();
    let traj = run_episode(
        env,
        |s| {
            let mean = policy.forward(s.as_slice())?;
            let action = sample_action(&mean, policy.log_std, &mut rng);
            log_probs.push(log_prob(&mean, policy.log_std, &action));
            Ok(action)
        },
        env.config().max_episode_len,
    )?;
    Ok((traj, log_probs))
}

/// Runs whole episodes from reset until at least `batch_steps` steps are
/// collected. Episodes are never split.
///
/// Episodes are generated in waves across the executor and appended in episode
/// index order; surplus episodes of the last wave are dropped. The batch is
/// therefore the same for every worker count.
pub fn collect_rollouts(
    env: &Env,
    policy: &GaussianMlpPolicy,
    batch_steps: usize,
    seed: u64,
    exec: &Executor,
) -> Result<RolloutBatch> {
    if batch_steps < 1 {
        return Err(Error::invalid("batch_steps must be >= 1"));
    }
    if policy.input_dim() != env.state_dim() || policy.output_dim() != env.action_dim() {
        return Err(Error::invalid(format!(
            "policy maps {} -> {}, environment needs {} -> {}",
            policy.input_dim(),
            policy.output_dim(),
            env.state_dim(),
            env.action_dim()
        )));
    }
    let cap = env.config().max_episode_len;
    let mut batch = RolloutBatch {
        state_dim: env.state_dim(),
        action_dim: env.action_dim(),
        ..Default::default()
    };
    let mut next_index = 0u64;
    while batch.len() < batch_steps {
        // Lower bound on the episodes still needed, since each has <= cap steps.
        let needed = (batch_steps - batch.len()).div_ceil(cap);
        let wave = needed.max(exec.workers());
        let base = next_index;
        let episodes = exec.map(wave, |k| sample_episode(env, policy, seed, base + k as u64));
        next_index += wave as u64;
        for episode in episodes {
            let (traj, log_probs) = episode?;
            batch.push_episode(env, &traj, &log_probs);
            if batch.len() >= batch_steps {
                break;
            }
        }
    }
    Ok(batch)
}
