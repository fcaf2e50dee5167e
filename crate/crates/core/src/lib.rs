//! Multi-vehicle intersection management on a grid street plan.
//!
//! The crate is split along the lines of the control problem:
//!
//! - [`env`]: a deterministic point-mass simulator with saturated kinematics and a
//!   built-in safety mechanism that stops vehicles touching a street boundary or
//!   another vehicle.
//! - [`policy`]: a tanh MLP emitting the mean of a Gaussian over acceleration
//!   commands, with a single shared log standard deviation.
//! - [`trpo`]: rollout collection, Monte Carlo returns, a linear baseline,
//!   Fisher-vector products, conjugate gradient and the KL-constrained line search.
//! - [`miqp`]: the big-M mixed-integer quadratic baseline, its LP-format export and
//!   a constraint oracle for simulator trajectories.
//! - [`io`]: the `key = value` scenario/config files and the trajectory CSV.
//!
//! Data-parallel loops (episode collection, batched policy passes) run on rayon
//! when the `parallel` feature is enabled and fall back to plain iteration
//! otherwise. Results never depend on the worker count.

pub mod env;
pub mod error;
pub mod eval;
pub mod io;
pub mod miqp;
pub mod par;
pub mod policy;
pub mod trpo;

pub use error::{Error, Result};
