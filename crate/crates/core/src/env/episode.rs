use super::sim::{Env, EnvState, StepEvents};
use crate::error::{Error, Result};

/// A recorded episode: `states` holds the reset state followed by one state
/// per step, so `states.len() == actions.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<EnvState>,
    /// Raw (unsaturated) actions as produced by the controller.
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub events: Vec<StepEvents>,
    /// True if the episode ended in the terminal state.
    pub done: bool,
    pub horizon: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn near_collisions(&self) -> usize {
        self.events.iter().map(StepEvents::near_collisions).sum()
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Per-vehicle travel time: `dt` times the first step from which the vehicle
    /// stays within `eta` of its destination until the end of the episode, or
    /// `dt * horizon` if it is not there at the end.
    pub fn travel_times(&self, env: &Env) -> Vec<f64> {
        (0..env.n_vehicles())
            .map(|i| {
                let arrival = self
                    .states
                    .iter()
                    .rposition(|s| env.distance_to_destination(s, i) >= env.config().eta)
                    .map_or(0, |k| k + 1);
                let steps = if arrival < self.states.len() {
                    arrival
                } else {
                    self.horizon
                };
                env.config().dt * steps as f64
            })
            .collect()
    }

    pub fn total_travel_time(&self, env: &Env) -> f64 {
        self.travel_times(env).iter().sum()
    }
}

/// Drives `env` from reset with `controller` until the terminal state or
/// `horizon` steps. The environment's own episode cap is not applied here.
pub fn run_episode<F>(env: &Env, mut controller: F, horizon: usize) -> Result<Trajectory>
where
    F: FnMut(&EnvState) -> Result<Vec<f64>>,
{
    if horizon < 1 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let mut state = env.reset();
    let mut traj = Trajectory {
        states: vec![state.clone()],
        actions: Vec::new(),
        rewards: Vec::new(),
        events: Vec::new(),
        done: false,
        horizon,
    };
    for _ in 0..horizon {
        let action = controller(&state)?;
        let step = env.step(&state, &action)?;
        traj.actions.push(action);
        traj.rewards.push(step.reward);
        traj.events.push(step.events);
        traj.states.push(step.next_state.clone());
        state = step.next_state;
        if step.done {
            traj.done = true;
            break;
        }
    }
    Ok(traj)
}
