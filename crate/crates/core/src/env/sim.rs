use super::config::EnvConfig;
use super::layout::{is_legal_position, project_to_corridor, sat};
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// A pair counts as colliding when its distance is below `2R - PAIR_TOLERANCE`.
/// Resolution places pairs at exactly `2R` up to rounding, and the tolerance
/// keeps that rounding from re-triggering a stop.
pub const PAIR_TOLERANCE: f64 = 1e-12;

/// Positions and velocities of all vehicles, laid out per vehicle as
/// `(x, y, vx, vy)`, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    values: Vec<f64>,
    pub t: usize,
}

impl EnvState {
    pub fn from_values(values: Vec<f64>, t: usize) -> Result<Self> {
        if values.len() % 4 != 0 {
            return Err(Error::invalid(format!(
                "state length {} is not a multiple of 4",
                values.len()
            )));
        }
        Ok(EnvState { values, t })
    }

    pub fn n_vehicles(&self) -> usize {
        self.values.len() / 4
    }

    /// The observation vector fed to the policy.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        (self.values[4 * i], self.values[4 * i + 1])
    }

    pub fn velocity(&self, i: usize) -> (f64, f64) {
        (self.values[4 * i + 2], self.values[4 * i + 3])
    }

    pub fn set_position(&mut self, i: usize, (x, y): (f64, f64)) {
        self.values[4 * i] = x;
        self.values[4 * i + 1] = y;
    }

    pub fn set_velocity(&mut self, i: usize, (vx, vy): (f64, f64)) {
        self.values[4 * i + 2] = vx;
        self.values[4 * i + 3] = vy;
    }
}

/// What the safety mechanism did to one vehicle during a step. A pair stop
/// takes precedence over a boundary stop when both happen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VehicleEvent {
    #[default]
    None,
    Boundary,
    Pair,
}

impl VehicleEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            VehicleEvent::None => "none",
            VehicleEvent::Boundary => "boundary",
            VehicleEvent::Pair => "pair",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepEvents {
    /// Boundary stops, counted per vehicle projection.
    pub boundary: usize,
    /// Pair stops, counted per resolved pair.
    pub pair: usize,
    /// Set when `resolve_iters` passes left a pair closer than `2R`.
    pub unresolved: bool,
    pub per_vehicle: Vec<VehicleEvent>,
}

impl StepEvents {
    /// Safety-mechanism activations ("near collisions") during the step.
    pub fn near_collisions(&self) -> usize {
        self.boundary + self.pair
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    pub events: StepEvents,
}

/// The simulator for one scenario. Holds no mutable state; all dynamics are in
/// [`Env::step`].
#[derive(Debug, Clone)]
pub struct Env {
    scenario: Scenario,
    config: EnvConfig,
    destinations: Vec<(f64, f64)>,
}

impl Env {
    pub fn new(scenario: Scenario, config: EnvConfig) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        let half = scenario.layout.street_width / 2.0 - config.safe_radius - config.boundary_margin;
        if half < 0.0 {
            return Err(Error::InvalidLayout(format!(
                "street_width/2 = {} leaves no room for safe_radius + boundary_margin",
                scenario.layout.street_width / 2.0
            )));
        }
        let destinations = (0..scenario.n_vehicles())
            .map(|i| scenario.destination(i))
            .collect();
        Ok(Env {
            scenario,
            config,
            destinations,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn n_vehicles(&self) -> usize {
        self.scenario.n_vehicles()
    }

    pub fn state_dim(&self) -> usize {
        4 * self.n_vehicles()
    }

    pub fn action_dim(&self) -> usize {
        2 * self.n_vehicles()
    }

    /// Every vehicle at its source intersection, at rest.
    pub fn reset(&self) -> EnvState {
        let mut values = Vec::with_capacity(self.state_dim());
        for i in 0..self.n_vehicles() {
            let (x, y) = self.scenario.source(i);
            values.extend_from_slice(&[x, y, 0.0, 0.0]);
        }
        EnvState { values, t: 0 }
    }

    pub fn distance_to_destination(&self, state: &EnvState, i: usize) -> f64 {
        let (x, y) = state.position(i);
        let (dx, dy) = self.destinations[i];
        (x - dx).hypot(y - dy)
    }

    pub fn is_terminal(&self, state: &EnvState) -> bool {
        (0..self.n_vehicles()).all(|i| self.distance_to_destination(state, i) < self.config.eta)
    }

    /// `1` once every vehicle is within `eta` of its destination, otherwise
    /// `-alpha` times the summed distances.
    pub fn reward(&self, state: &EnvState) -> f64 {
        if self.is_terminal(state) {
            return 1.0;
        }
        let total: f64 = (0..self.n_vehicles())
            .map(|i| self.distance_to_destination(state, i))
            .sum();
        -self.config.alpha * total
    }

    pub fn step(&self, state: &EnvState, action: &[f64]) -> Result<StepResult> {
        let n = self.n_vehicles();
        if state.n_vehicles() != n {
            return Err(Error::invalid(format!(
                "state has {} vehicles, scenario has {n}",
                state.n_vehicles()
            )));
        }
        if action.len() != 2 * n {
            return Err(Error::invalid(format!(
                "action length {} != {}",
                action.len(),
                2 * n
            )));
        }
        if let Some(bad) = action.iter().position(|a| !a.is_finite()) {
            return Err(Error::invalid(format!("non-finite action component {bad}")));
        }
        let cfg = &self.config;
        let layout = &self.scenario.layout;
        let h = cfg.dt;

        let mut next = EnvState {
            values: vec![0.0; 4 * n],
            t: state.t + 1,
        };
        for i in 0..n {
            let ax = sat(action[2 * i], -cfg.a_max, cfg.a_max);
            let ay = sat(action[2 * i + 1], -cfg.a_max, cfg.a_max);
            let (x, y) = state.position(i);
            let (vx, vy) = state.velocity(i);
            next.set_position(
                i,
                (
                    sat(x + h * vx, layout.x_min, layout.x_max),
                    sat(y + h * vy, layout.y_min, layout.y_max),
                ),
            );
            next.set_velocity(
                i,
                (
                    sat(vx + h * ax, -cfg.v_max, cfg.v_max),
                    sat(vy + h * ay, -cfg.v_max, cfg.v_max),
                ),
            );
        }

        let mut events = StepEvents {
            per_vehicle: vec![VehicleEvent::None; n],
            ..Default::default()
        };
        for i in 0..n {
            self.enforce_boundary(&mut next, i, &mut events)?;
        }
        self.resolve_pairs(&mut next, &mut events)?;

        let reward = self.reward(&next);
        let done = self.is_terminal(&next);
        let truncated = !done && next.t >= cfg.max_episode_len;
        Ok(StepResult {
            next_state: next,
            reward,
            done,
            truncated,
            events,
        })
    }

    // Stops vehicle `i` and moves it back inside a corridor if it left one.
    fn enforce_boundary(
        &self,
        state: &mut EnvState,
        i: usize,
        events: &mut StepEvents,
    ) -> Result<bool> {
        let layout = &self.scenario.layout;
        let pos = state.position(i);
        if layout.in_area(pos.0, pos.1) && is_legal_position(layout, self.config.safe_radius, pos) {
            return Ok(false);
        }
        let projected = project_to_corridor(
            layout,
            self.config.safe_radius,
            self.config.boundary_margin,
            pos,
        )?;
        state.set_position(i, projected);
        state.set_velocity(i, (0.0, 0.0));
        events.boundary += 1;
        if events.per_vehicle[i] == VehicleEvent::None {
            events.per_vehicle[i] = VehicleEvent::Boundary;
        }
        Ok(true)
    }

    // Up to `resolve_iters` Gauss-Seidel passes over all pairs in ascending
    // (i, j) order. A push can carry a vehicle out of its corridor, so pushed
    // vehicles get the boundary treatment again at the end of each pass.
    fn resolve_pairs(&self, state: &mut EnvState, events: &mut StepEvents) -> Result<()> {
        let n = state.n_vehicles();
        let min_dist = 2.0 * self.config.safe_radius;
        let mut pushed = vec![false; n];
        for _ in 0..self.config.resolve_iters {
            let mut changed = false;
            pushed.iter_mut().for_each(|p| *p = false);
            for i in 0..n {
                for j in (i + 1)..n {
                    let (xi, yi) = state.position(i);
                    let (xj, yj) = state.position(j);
                    let (dx, dy) = (xj - xi, yj - yi);
                    let dist = dx.hypot(dy);
                    if dist >= min_dist - PAIR_TOLERANCE {
                        continue;
                    }
                    let (ux, uy) = if dist == 0.0 {
                        (1.0, 0.0)
                    } else {
                        (dx / dist, dy / dist)
                    };
                    let half = 0.5 * (min_dist - dist);
                    state.set_position(i, (xi - half * ux, yi - half * uy));
                    state.set_position(j, (xj + half * ux, yj + half * uy));
                    state.set_velocity(i, (0.0, 0.0));
                    state.set_velocity(j, (0.0, 0.0));
                    events.pair += 1;
                    events.per_vehicle[i] = VehicleEvent::Pair;
                    events.per_vehicle[j] = VehicleEvent::Pair;
                    pushed[i] = true;
                    pushed[j] = true;
                    changed = true;
                }
            }
            if !changed {
                return Ok(());
            }
            for (i, _) in pushed.iter().enumerate().filter(|(_, p)| **p) {
                self.enforce_boundary(state, i, events)?;
            }
        }
        events.unresolved = self.min_pair_distance(state) < min_dist - PAIR_TOLERANCE;
        Ok(())
    }

    fn min_pair_distance(&self, state: &EnvState) -> f64 {
        let n = state.n_vehicles();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let (xi, yi) = state.position(i);
                let (xj, yj) = state.position(j);
                best = best.min((xj - xi).hypot(yj - yi));
            }
        }
        best
    }
}
