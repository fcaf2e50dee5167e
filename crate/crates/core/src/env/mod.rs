//! Grid-street kinematic simulator.
//!
//! Vehicles are point masses with saturated double-integrator dynamics. After
//! integrating, the safety mechanism stops any vehicle that left its street
//! corridor (projecting it back inside with a margin) and then stops and
//! separates any pair closer than twice the safe radius.

mod config;
mod episode;
mod layout;
mod scenario;
mod sim;

pub use config::EnvConfig;
pub use episode::{run_episode, Trajectory};
pub use layout::{
    intersection_position, is_legal_position, project_to_corridor, saturate, GridLayout,
};
pub use scenario::{Route, Scenario};
pub use sim::{Env, EnvState, StepEvents, StepResult, VehicleEvent, PAIR_TOLERANCE};
