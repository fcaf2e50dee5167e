//! Mixed-integer quadratic baseline: model construction, LP text export, and
//! trajectory oracles for the geometric and big-M constraint families.
//!
//! The model minimizes the summed squared distance to the destinations over
//! a fixed horizon. Pair separation uses the coordinate disjunction
//! `|dx| >= 2R or |dy| >= 2R`, which is stronger than the 2-norm condition
//! the simulator enforces, so [`check_geometric`] and [`assign_binaries`]
//! report the two families separately.

mod check;
mod lp;
mod model;

pub use check::{
    assign_binaries, check_geometric, model_feasible, nearest_index, CheckReport, Violation,
    Witness, CHECK_TOL, REPORT_HEADER,
};
pub use lp::{emit_lp, parse_lp};
pub use model::{
    big_m_lower_bound, build_miqp, default_big_m, Constraint, MiqpModel, ModelCounts,
    ObjectiveSense, Sense, VarKind, Variable,
};
