//! Running a trained policy: single episodes and multi-episode summaries.

use crate::env::{run_episode, Env, Trajectory};
use crate::error::{Error, Result};
use crate::policy::{sample_action, GaussianMlpPolicy};
use crate::trpo::episode_rng;

/// Default evaluation horizon in steps (ten times the default episode cap).
pub const DEFAULT_HORIZON: usize = 2000;

fn check_dims(env: &Env, policy: &GaussianMlpPolicy) -> Result<()> {
    if policy.input_dim() != env.state_dim() || policy.output_dim() != env.action_dim() {
        return Err(Error::invalid(format!(
            "policy maps {} -> {} but the scenario has {} vehicles ({} -> {})",
            policy.input_dim(),
            policy.output_dim(),
            env.n_vehicles(),
            env.state_dim(),
            env.action_dim()
        )));
    }
    Ok(())
}

/// One episode of `horizon` steps at most. With `deterministic` the mean
/// action is applied; otherwise actions are sampled from the random stream
/// `index` of `seed`.
pub fn run_policy(
    env: &Env,
    policy: &GaussianMlpPolicy,
    horizon: usize,
    deterministic: bool,
    seed: u64,
    index: u64,
) -> Result<Trajectory> {
    check_dims(env, policy)?;
    let mut rng = episode_rng(seed, index);
    run_episode(
        env,
        |s| {
            let mean = policy.forward(s.as_slice())?;
            Ok(if deterministic {
                mean
            } else {
                sample_action(&mean, policy.log_std, &mut rng)
            })
        },
        horizon,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Travel time summed over vehicles, per episode.
    pub total_travel_times: Vec<f64>,
    /// Fraction of episodes that reached the terminal state within the horizon.
    pub success_rate: f64,
    pub near_collisions: usize,
}

impl EvalSummary {
    pub fn mean_travel_time(&self) -> f64 {
        self.total_travel_times.iter().sum::<f64>() / self.episodes as f64
    }

    pub fn min_travel_time(&self) -> f64 {
        self.total_travel_times
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_travel_time(&self) -> f64 {
        self.total_travel_times
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn evaluate(
    env: &Env,
    policy: &GaussianMlpPolicy,
    episodes: usize,
    horizon: usize,
    deterministic: bool,
    seed: u64,
) -> Result<EvalSummary> {
    if episodes < 1 {
        return Err(Error::invalid("episodes must be >= 1"));
    }
    let mut times = Vec::with_capacity(episodes);
    let mut successes = 0;
    let mut near = 0;
    for k in 0..episodes {
        let traj = run_policy(env, policy, horizon, deterministic, seed, k as u64)?;
        times.push(traj.total_travel_time(env));
        successes += usize::from(traj.done);
        near += traj.near_collisions();
    }
    Ok(EvalSummary {
        episodes,
        total_travel_times: times,
        success_rate: successes as f64 / episodes as f64,
        near_collisions: near,
    })
}

/// Sum over vehicles of the Manhattan grid-path length divided by `v_max`.
pub fn travel_time_lower_bound(env: &Env) -> f64 {
    let s = env.scenario();
    (0..s.n_vehicles())
        .map(|i| s.manhattan_distance(i) / env.config().v_max)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, GridLayout, Route, Scenario};
    use crate::policy::init_policy;

    fn env(routes: Vec<Route>) -> Env {
        let layout = GridLayout::new(2, 2, 1.0, 1.0, 0.2).unwrap();
        Env::new(Scenario::new(layout, routes).unwrap(), EnvConfig::default()).unwrap()
    }

    #[test]
    fn vehicle_at_destination_has_zero_travel_time() {
        let e = env(vec![Route::new(0, 0, 0, 0)]);
        let p = init_policy(1, &[4], 0, 1.0).unwrap();
        let s = evaluate(&e, &p, 3, 100, false, 0).unwrap();
        assert_eq!(s.total_travel_times, vec![0.0; 3]);
        assert_eq!(s.success_rate, 1.0);
    }

    #[test]
    fn deterministic_single_episode() {
        let e = env(vec![Route::new(-1, -1, -1, 0), Route::new(1, 1, 0, 1)]);
        let p = init_policy(2, &[4], 0, 1.0).unwrap();
        let s = evaluate(&e, &p, 1, 50, true, 0).unwrap();
        assert_eq!(s.min_travel_time(), s.max_travel_time());
        assert!((0.0..=1.0).contains(&s.success_rate));
        // Never arriving costs the full horizon per vehicle.
        assert!((s.mean_travel_time() - 2.0 * 50.0 * 0.01).abs() < 1e-12);
        assert!((travel_time_lower_bound(&e) - 2.5).abs() < 1e-12);
        let wrong = init_policy(3, &[4], 0, 1.0).unwrap();
        assert!(evaluate(&e, &wrong, 1, 50, true, 0).is_err());
        assert!(evaluate(&e, &p, 0, 50, true, 0).is_err());
    }
}
