//! Text formats: `key = value` scenario/config files and the trajectory CSV.
//!
//! Floats are written with 17 significant digits so that every value round
//! trips exactly.

mod kv;
mod trajectory;

pub use kv::{
    env_config_to_string, parse_env_config, parse_scenario, parse_train_config, read_env_config,
    read_scenario, read_train_config, scenario_to_string, train_config_to_string,
};
pub use trajectory::{
    read_trajectory_csv, trajectory_csv, write_trajectory_csv, TrajRow, TrajectoryTable,
    TRAJECTORY_HEADER,
};

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
