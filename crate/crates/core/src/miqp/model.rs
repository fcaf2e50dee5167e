use crate::env::{EnvConfig, GridLayout, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `sum(coef * var) sense rhs`, with variables referenced by table index.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Whether `values` satisfy the row up to `slack`.
    pub fn satisfied(&self, values: &[f64], slack: f64) -> bool {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + slack,
            Sense::Ge => lhs >= self.rhs - slack,
            Sense::Eq => (lhs - self.rhs).abs() <= slack,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Mixed-integer quadratic program over a fixed horizon.
///
/// The objective is `constant + sum(linear) + sum(quadratic)` where each
/// quadratic entry `(i, j, q)` contributes `q * v[i] * v[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MiqpModel {
    pub n_vehicles: usize,
    pub horizon: usize,
    pub big_m: f64,
    pub sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub objective_constant: f64,
    pub objective_linear: Vec<(usize, f64)>,
    pub objective_quadratic: Vec<(usize, usize, f64)>,
    pub constraints: Vec<Constraint>,
}

/// Variable and row counts by family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelCounts {
    pub continuous: usize,
    pub integer: usize,
    pub corridor_binaries: usize,
    pub pair_binaries: usize,
    pub endpoint_rows: usize,
    pub dynamics_rows: usize,
    pub corridor_rows: usize,
    pub pair_rows: usize,
}

impl ModelCounts {
    /// Counts implied by the construction for `n` vehicles over `t` steps.
    pub fn closed_form(n: usize, t: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        ModelCounts {
            continuous: 4 * n * t + 2 * n * (t - 1),
            integer: 2 * n * t,
            corridor_binaries: 2 * n * t,
            pair_binaries: 4 * pairs * t,
            endpoint_rows: 6 * n,
            dynamics_rows: 4 * n * (t - 1),
            corridor_rows: 5 * n * t,
            pair_rows: 5 * pairs * t,
        }
    }

    pub fn variables(&self) -> usize {
        self.continuous + self.integer + self.corridor_binaries + self.pair_binaries
    }

    pub fn constraints(&self) -> usize {
        self.endpoint_rows + self.dynamics_rows + self.corridor_rows + self.pair_rows
    }
}

impl MiqpModel {
    pub fn counts(&self) -> ModelCounts {
        let mut c = ModelCounts::default();
        for v in &self.variables {
            match v.kind {
                VarKind::Continuous => c.continuous += 1,
                VarKind::Integer => c.integer += 1,
                VarKind::Binary if v.name.starts_with('b') => c.corridor_binaries += 1,
                VarKind::Binary => c.pair_binaries += 1,
            }
        }
        for row in &self.constraints {
            let family = row.name.split('_').next().unwrap_or("");
            match family {
                "start" | "goal" => c.endpoint_rows += 1,
                "dyn" => c.dynamics_rows += 1,
                "corr" => c.corridor_rows += 1,
                "sep" => c.pair_rows += 1,
                _ => {}
            }
        }
        c
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        let lin: f64 = self
            .objective_linear
            .iter()
            .map(|&(j, a)| a * values[j])
            .sum();
        let quad: f64 = self
            .objective_quadratic
            .iter()
            .map(|&(i, j, q)| q * values[i] * values[j])
            .sum();
        self.objective_constant + lin + quad
    }
}

/// Upper bound on every coordinate-difference expression in the big-M rows.
pub fn big_m_lower_bound(layout: &GridLayout, safe_radius: f64) -> f64 {
    (layout.x_max - layout.x_min)
        + (layout.y_max - layout.y_min)
        + 4.0 * safe_radius
        + layout.street_width
}

/// Default big-M constant: ten times the lower bound.
pub fn default_big_m(layout: &GridLayout, safe_radius: f64) -> f64 {
    10.0 * big_m_lower_bound(layout, safe_radius)
}

/// Index arithmetic for the variable table.
#[derive(Debug, Clone, Copy)]
pub(crate) struct VarIndex {
    n: usize,
    t: usize,
}

impl VarIndex {
    pub(crate) fn new(n: usize, t: usize) -> Self {
        VarIndex { n, t }
    }

    /// Offset of `x`, `y`, `vx`, `vy` (k = 0..4) for vehicle `i` at step `s`.
    pub(crate) fn state(&self, i: usize, s: usize, k: usize) -> usize {
        4 * (i * self.t + s) + k
    }

    pub(crate) fn accel(&self, i: usize, s: usize, k: usize) -> usize {
        4 * self.n * self.t + 2 * (i * (self.t - 1) + s) + k
    }

    fn integers_start(&self) -> usize {
        4 * self.n * self.t + 2 * self.n * (self.t - 1)
    }

    /// `r` (k = 0) or `c` (k = 1).
    pub(crate) fn grid(&self, i: usize, s: usize, k: usize) -> usize {
        self.integers_start() + 2 * (i * self.t + s) + k
    }

    /// `bx` (k = 0) or `by` (k = 1).
    pub(crate) fn corridor(&self, i: usize, s: usize, k: usize) -> usize {
        self.integers_start() + 2 * self.n * self.t + 2 * (i * self.t + s) + k
    }

    /// `cx, cy, dx, dy` (k = 0..4) for pair number `p` at step `s`.
    pub(crate) fn pair(&self, p: usize, s: usize, k: usize) -> usize {
        self.integers_start() + 4 * self.n * self.t + 4 * (p * self.t + s) + k
    }
}

/// Pairs `(i, j)` with `i < j` in lexicographic order.
pub(crate) fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

fn var(name: String, kind: VarKind, lower: f64, upper: f64) -> Variable {
    Variable {
        name,
        kind,
        lower,
        upper,
    }
}

fn row(name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Constraint {
    Constraint {
        name,
        terms,
        sense,
        rhs,
    }
}

/// Builds the model that drives every vehicle from its source to its
/// destination in `horizon` steps, minimizing the summed squared distance to
/// the destinations.
pub fn build_miqp(
    scenario: &Scenario,
    config: &EnvConfig,
    horizon: usize,
    big_m: f64,
) -> Result<MiqpModel> {
    scenario.validate()?;
    config.validate()?;
    if horizon < 2 {
        return Err(Error::invalid("horizon must be >= 2"));
    }
    let layout = &scenario.layout;
    let r_safe = config.safe_radius;
    let lower = big_m_lower_bound(layout, r_safe);
    if !(big_m.is_finite() && big_m >= lower) {
        return Err(Error::invalid(format!(
            "big-M {big_m} is below big_m_lower_bound = {lower}"
        )));
    }
    let n = scenario.n_vehicles();
    let t_len = horizon;
    let ix = VarIndex::new(n, t_len);
    let h = config.dt;
    let (vm, am) = (config.v_max, config.a_max);
    let m = big_m;

    let mut variables = Vec::with_capacity(ModelCounts::closed_form(n, t_len).variables());
    for i in 0..n {
        for s in 0..t_len {
            variables.push(var(
                format!("x_{i}_{s}"),
                VarKind::Continuous,
                layout.x_min,
                layout.x_max,
            ));
            variables.push(var(
                format!("y_{i}_{s}"),
                VarKind::Continuous,
                layout.y_min,
                layout.y_max,
            ));
            variables.push(var(format!("vx_{i}_{s}"), VarKind::Continuous, -vm, vm));
            variables.push(var(format!("vy_{i}_{s}"), VarKind::Continuous, -vm, vm));
        }
    }
    for i in 0..n {
        for s in 0..t_len - 1 {
            variables.push(var(format!("ax_{i}_{s}"), VarKind::Continuous, -am, am));
            variables.push(var(format!("ay_{i}_{s}"), VarKind::Continuous, -am, am));
        }
    }
    let (max_r, max_c) = (layout.max_row() as f64, layout.max_col() as f64);
    for i in 0..n {
        for s in 0..t_len {
            variables.push(var(format!("r_{i}_{s}"), VarKind::Integer, -max_r, max_r));
            variables.push(var(format!("c_{i}_{s}"), VarKind::Integer, -max_c, max_c));
        }
    }
    for i in 0..n {
        for s in 0..t_len {
            variables.push(var(format!("bx_{i}_{s}"), VarKind::Binary, 0.0, 1.0));
            variables.push(var(format!("by_{i}_{s}"), VarKind::Binary, 0.0, 1.0));
        }
    }
    let pair_list = pairs(n);
    for &(i, j) in &pair_list {
        for s in 0..t_len {
            for name in ["cx", "cy", "dx", "dy"] {
                variables.push(var(
                    format!("{name}_{i}_{j}_{s}"),
                    VarKind::Binary,
                    0.0,
                    1.0,
                ));
            }
        }
    }

    let mut objective_constant = 0.0;
    let mut objective_linear = Vec::with_capacity(2 * n * t_len);
    let mut objective_quadratic = Vec::with_capacity(2 * n * t_len);
    for i in 0..n {
        let (dx, dy) = scenario.destination(i);
        for s in 0..t_len {
            for (k, d) in [(0, dx), (1, dy)] {
                let v = ix.state(i, s, k);
                objective_quadratic.push((v, v, 1.0));
                if d != 0.0 {
                    objective_linear.push((v, -2.0 * d));
                }
                objective_constant += d * d;
            }
        }
    }

    let mut constraints = Vec::with_capacity(ModelCounts::closed_form(n, t_len).constraints());
    let last = t_len - 1;
    for i in 0..n {
        let (sx, sy) = scenario.source(i);
        let (dx, dy) = scenario.destination(i);
        constraints.push(row(
            format!("start_x_{i}"),
            vec![(ix.state(i, 0, 0), 1.0)],
            Sense::Eq,
            sx,
        ));
        constraints.push(row(
            format!("start_y_{i}"),
            vec![(ix.state(i, 0, 1), 1.0)],
            Sense::Eq,
            sy,
        ));
        constraints.push(row(
            format!("goal_x_{i}"),
            vec![(ix.state(i, last, 0), 1.0)],
            Sense::Eq,
            dx,
        ));
        constraints.push(row(
            format!("goal_y_{i}"),
            vec![(ix.state(i, last, 1), 1.0)],
            Sense::Eq,
            dy,
        ));
        constraints.push(row(
            format!("start_vx_{i}"),
            vec![(ix.state(i, 0, 2), 1.0)],
            Sense::Eq,
            0.0,
        ));
        constraints.push(row(
            format!("start_vy_{i}"),
            vec![(ix.state(i, 0, 3), 1.0)],
            Sense::Eq,
            0.0,
        ));
    }
    for i in 0..n {
        for s in 0..last {
            for (k, name) in [(0, "x"), (1, "y")] {
                constraints.push(row(
                    format!("dyn_{name}_{i}_{s}"),
                    vec![
                        (ix.state(i, s + 1, k), 1.0),
                        (ix.state(i, s, k), -1.0),
                        (ix.state(i, s, k + 2), -h),
                    ],
                    Sense::Eq,
                    0.0,
                ));
            }
            for (k, name) in [(0, "vx"), (1, "vy")] {
                constraints.push(row(
                    format!("dyn_{name}_{i}_{s}"),
                    vec![
                        (ix.state(i, s + 1, k + 2), 1.0),
                        (ix.state(i, s, k + 2), -1.0),
                        (ix.accel(i, s, k), -h),
                    ],
                    Sense::Eq,
                    0.0,
                ));
            }
        }
    }
    let half = layout.street_width / 2.0 - r_safe;
    for i in 0..n {
        for s in 0..t_len {
            let bx = ix.corridor(i, s, 0);
            let by = ix.corridor(i, s, 1);
            constraints.push(row(
                format!("corr_or_{i}_{s}"),
                vec![(bx, 1.0), (by, 1.0)],
                Sense::Ge,
                1.0,
            ));
            // x - c*b_w <= half*bx + M(1 - bx), and the mirrored lower bound;
            // likewise y against r*b_h.
            for (axis, k, grid_k, block, b) in [
                ("x", 0, 1, layout.block_width, bx),
                ("y", 1, 0, layout.block_height, by),
            ] {
                let pos = ix.state(i, s, k);
                let g = ix.grid(i, s, grid_k);
                constraints.push(row(
                    format!("corr_{axis}u_{i}_{s}"),
                    vec![(pos, 1.0), (g, -block), (b, m - half)],
                    Sense::Le,
                    m,
                ));
                constraints.push(row(
                    format!("corr_{axis}l_{i}_{s}"),
                    vec![(pos, 1.0), (g, -block), (b, half - m)],
                    Sense::Ge,
                    -m,
                ));
            }
        }
    }
    let two_r = 2.0 * r_safe;
    for (p, &(i, j)) in pair_list.iter().enumerate() {
        for s in 0..t_len {
            let b: Vec<usize> = (0..4).map(|k| ix.pair(p, s, k)).collect();
            constraints.push(row(
                format!("sep_or_{i}_{j}_{s}"),
                b.iter().map(|&v| (v, 1.0)).collect(),
                Sense::Ge,
                1.0,
            ));
            // c rows: d_i - d_j >= 2R c - M(1 - c); d rows: <= -2R d + M(1 - d).
            for (axis, k) in [("x", 0), ("y", 1)] {
                let (pi, pj) = (ix.state(i, s, k), ix.state(j, s, k));
                constraints.push(row(
                    format!("sep_c{axis}_{i}_{j}_{s}"),
                    vec![(pi, 1.0), (pj, -1.0), (b[k], -(two_r + m))],
                    Sense::Ge,
                    -m,
                ));
                constraints.push(row(
                    format!("sep_d{axis}_{i}_{j}_{s}"),
                    vec![(pi, 1.0), (pj, -1.0), (b[2 + k], two_r + m)],
                    Sense::Le,
                    m,
                ));
            }
        }
    }

    Ok(MiqpModel {
        n_vehicles: n,
        horizon: t_len,
        big_m,
        sense: ObjectiveSense::Minimize,
        variables,
        objective_constant,
        objective_linear,
        objective_quadratic,
        constraints,
    })
}
