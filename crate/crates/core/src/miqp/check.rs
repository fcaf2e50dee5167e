//! Trajectory oracles: geometric constraints and big-M witnesses.

use super::model::{big_m_lower_bound, pairs, MiqpModel, VarIndex};
use crate::env::{EnvConfig, GridLayout, Scenario};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, TrajectoryTable};

/// Slack used for box, dynamics, pair and big-M checks.
pub const CHECK_TOL: f64 = 1e-9;

pub const REPORT_HEADER: &str = "family,vehicle_i,vehicle_j,t,magnitude";

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: &'static str,
    pub vehicle_i: usize,
    pub vehicle_j: Option<usize>,
    pub t: usize,
    pub magnitude: f64,
}

/// Binary and integer values that satisfy the big-M rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub n_vehicles: usize,
    pub n_steps: usize,
    /// `(r, c)` per `t * n + i`.
    pub grid: Vec<(i64, i64)>,
    /// `[bx, by]` per `t * n + i`.
    pub corridor: Vec<[bool; 2]>,
    /// `[cx, cy, dx, dy]` per `p * n_steps + t`, pairs in `(i, j)`, `i < j` order.
    pub pair: Vec<[bool; 4]>,
}

impl Witness {
    /// Full variable assignment in the order of [`super::build_miqp`]'s table.
    pub fn model_values(&self, table: &TrajectoryTable) -> Vec<f64> {
        let (n, t_len) = (self.n_vehicles, self.n_steps);
        let ix = VarIndex::new(n, t_len);
        let n_pairs = n * n.saturating_sub(1) / 2;
        let total = 4 * n * t_len + 2 * n * (t_len - 1) + 4 * n * t_len + 4 * n_pairs * t_len;
        let mut v = vec![0.0; total];
        for i in 0..n {
            for s in 0..t_len {
                let row = table.get(s, i);
                for (k, val) in [row.x, row.y, row.vx, row.vy].into_iter().enumerate() {
                    v[ix.state(i, s, k)] = val;
                }
                if s + 1 < t_len {
                    v[ix.accel(i, s, 0)] = row.ax;
                    v[ix.accel(i, s, 1)] = row.ay;
                }
                let (r, c) = self.grid[s * n + i];
                v[ix.grid(i, s, 0)] = r as f64;
                v[ix.grid(i, s, 1)] = c as f64;
                let b = self.corridor[s * n + i];
                v[ix.corridor(i, s, 0)] = f64::from(u8::from(b[0]));
                v[ix.corridor(i, s, 1)] = f64::from(u8::from(b[1]));
            }
        }
        for p in 0..n_pairs {
            for s in 0..t_len {
                for (k, &b) in self.pair[p * t_len + s].iter().enumerate() {
                    v[ix.pair(p, s, k)] = f64::from(u8::from(b));
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
    /// Set by [`assign_binaries`] when every disjunction has a witness.
    pub witness: Option<Witness>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for v in &self.violations {
            out += &format!(
                "{},{},{},{},{}\n",
                v.family,
                v.vehicle_i,
                v.vehicle_j.map(|j| j.to_string()).unwrap_or_default(),
                v.t,
                fmt_f64(v.magnitude)
            );
        }
        out
    }

    pub fn count(&self, family: &str) -> usize {
        self.violations
            .iter()
            .filter(|v| v.family == family)
            .count()
    }
}

/// Street index nearest to `v`; ties go to the smaller index.
pub fn nearest_index(v: f64, spacing: f64, max: i64) -> i64 {
    let mut best = -max;
    let mut best_d = f64::INFINITY;
    for k in -max..=max {
        let d = (v - k as f64 * spacing).abs();
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

fn check_shape(table: &TrajectoryTable, scenario: &Scenario, horizon: Option<usize>) -> Result<()> {
    if table.n_vehicles() != scenario.n_vehicles() {
        return Err(Error::Format {
            offset: 0,
            message: format!(
                "trajectory has {} vehicles, scenario has {}",
                table.n_vehicles(),
                scenario.n_vehicles()
            ),
        });
    }
    if let Some(t) = horizon {
        if table.n_steps() != t {
            return Err(Error::Format {
                offset: 0,
                message: format!("trajectory has {} steps, expected {t}", table.n_steps()),
            });
        }
    }
    Ok(())
}

fn outside(v: f64, lo: f64, hi: f64) -> f64 {
    (lo - v).max(v - hi).max(0.0)
}

struct Collector(Vec<Violation>);

impl Collector {
    fn single(&mut self, family: &'static str, i: usize, t: usize, magnitude: f64) {
        self.0.push(Violation {
            family,
            vehicle_i: i,
            vehicle_j: None,
            t,
            magnitude,
        });
    }
}

/// Checks box limits, dynamics residuals, endpoints, 2-norm pair separation
/// and corridor membership at every step.
///
/// Start conditions and dynamics use [`CHECK_TOL`]. The final position only
/// has to be within `eta` of the destination per coordinate, since a
/// simulated vehicle stops once it is inside that radius.
pub fn check_geometric(
    table: &TrajectoryTable,
    scenario: &Scenario,
    config: &EnvConfig,
    horizon: usize,
) -> Result<CheckReport> {
    check_shape(table, scenario, Some(horizon))?;
    let layout = &scenario.layout;
    let n = table.n_vehicles();
    let t_len = table.n_steps();
    let h = config.dt;
    let tol = CHECK_TOL;
    let mut out = Collector(Vec::new());
    for s in 0..t_len {
        for i in 0..n {
            let r = table.get(s, i);
            let boxes = [
                ("box_x", r.x, layout.x_min, layout.x_max),
                ("box_y", r.y, layout.y_min, layout.y_max),
                ("box_vx", r.vx, -config.v_max, config.v_max),
                ("box_vy", r.vy, -config.v_max, config.v_max),
                ("box_ax", r.ax, -config.a_max, config.a_max),
                ("box_ay", r.ay, -config.a_max, config.a_max),
            ];
            let checked = if s + 1 < t_len { 6 } else { 4 };
            for &(family, v, lo, hi) in &boxes[..checked] {
                let m = outside(v, lo, hi);
                if m > tol {
                    out.single(family, i, s, m);
                }
            }
            if s + 1 < t_len {
                let nx = table.get(s + 1, i);
                let residuals = [
                    ("dyn_x", nx.x - r.x - h * r.vx),
                    ("dyn_y", nx.y - r.y - h * r.vy),
                    ("dyn_vx", nx.vx - r.vx - h * r.ax),
                    ("dyn_vy", nx.vy - r.vy - h * r.ay),
                ];
                for (family, res) in residuals {
                    if res.abs() > tol {
                        out.single(family, i, s, res.abs());
                    }
                }
            }
            let half = layout.street_width / 2.0 - config.safe_radius;
            let (gap, _, _) = corridor_gap(layout, half, r.x, r.y);
            if gap > tol {
                out.single("corridor", i, s, gap);
            }
        }
        for &(i, j) in &pairs(n) {
            let (a, b) = (table.get(s, i), table.get(s, j));
            let d2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
            let two_r = 2.0 * config.safe_radius;
            if d2.sqrt() < two_r - tol {
                out.0.push(Violation {
                    family: "pair",
                    vehicle_i: i,
                    vehicle_j: Some(j),
                    t: s,
                    magnitude: two_r * two_r - d2,
                });
            }
        }
    }
    let last = t_len - 1;
    for i in 0..n {
        let first = table.get(0, i);
        let fin = table.get(last, i);
        let (sx, sy) = scenario.source(i);
        let (dx, dy) = scenario.destination(i);
        let ends = [
            ("start_x", first.x - sx, tol, 0),
            ("start_y", first.y - sy, tol, 0),
            ("start_vx", first.vx, tol, 0),
            ("start_vy", first.vy, tol, 0),
            ("goal_x", fin.x - dx, config.eta, last),
            ("goal_y", fin.y - dy, config.eta, last),
        ];
        for (family, dev, limit, s) in ends {
            if dev.abs() > limit {
                out.single(family, i, s, dev.abs());
            }
        }
    }
    Ok(CheckReport {
        violations: out.0,
        witness: None,
    })
}

/// Distance by which the nearest-street corridor bounds are missed (negative
/// when inside), with the `(r, c)` indices used.
fn corridor_gap(layout: &GridLayout, half: f64, x: f64, y: f64) -> (f64, i64, i64) {
    let c = nearest_index(x, layout.block_width, layout.max_col());
    let r = nearest_index(y, layout.block_height, layout.max_row());
    let ex = (x - c as f64 * layout.block_width).abs();
    let ey = (y - r as f64 * layout.block_height).abs();
    (ex.min(ey) - half, r, c)
}

fn b(v: bool) -> f64 {
    f64::from(u8::from(v))
}

/// Builds binary witnesses for the disjunctive rows and verifies them
/// against the big-M inequalities written out term by term.
///
/// Pair binaries are set for every separating condition that holds; a
/// pair-step where none holds is reported as `pair_disjunction`. Corridor
/// binaries use the nearest street indices; a vehicle-step inside neither
/// corridor is reported as `corridor_disjunction`.
pub fn assign_binaries(
    table: &TrajectoryTable,
    scenario: &Scenario,
    config: &EnvConfig,
    big_m: f64,
) -> Result<CheckReport> {
    check_shape(table, scenario, None)?;
    let layout = &scenario.layout;
    let lower = big_m_lower_bound(layout, config.safe_radius);
    if !(big_m.is_finite() && big_m >= lower) {
        return Err(Error::invalid(format!(
            "big-M {big_m} is below big_m_lower_bound = {lower}"
        )));
    }
    let n = table.n_vehicles();
    let t_len = table.n_steps();
    let m = big_m;
    let tol = CHECK_TOL;
    let two_r = 2.0 * config.safe_radius;
    let half = layout.street_width / 2.0 - config.safe_radius;
    let mut out = Collector(Vec::new());

    let mut grid = Vec::with_capacity(n * t_len);
    let mut corridor = Vec::with_capacity(n * t_len);
    for s in 0..t_len {
        for i in 0..n {
            let row = table.get(s, i);
            let (gap, r, c) = corridor_gap(layout, half, row.x, row.y);
            let ex = row.x - c as f64 * layout.block_width;
            let ey = row.y - r as f64 * layout.block_height;
            let bx = ex <= half && ex >= -half;
            let by = ey <= half && ey >= -half;
            if !(bx || by) {
                out.single("corridor_disjunction", i, s, gap);
            } else {
                let (fx, fy) = (b(bx), b(by));
                let literal = [
                    ("bigm_corr_xu", ex <= half * fx + m * (1.0 - fx) + tol),
                    ("bigm_corr_xl", ex >= -half * fx - m * (1.0 - fx) - tol),
                    ("bigm_corr_yu", ey <= half * fy + m * (1.0 - fy) + tol),
                    ("bigm_corr_yl", ey >= -half * fy - m * (1.0 - fy) - tol),
                ];
                for (family, ok) in literal {
                    if !ok {
                        out.single(family, i, s, ex.abs().max(ey.abs()));
                    }
                }
            }
            grid.push((r, c));
            corridor.push([bx, by]);
        }
    }

    let pair_list = pairs(n);
    let mut pair = vec![[false; 4]; pair_list.len() * t_len];
    for (p, &(i, j)) in pair_list.iter().enumerate() {
        for s in 0..t_len {
            let (a, bv) = (table.get(s, i), table.get(s, j));
            let dx = a.x - bv.x;
            let dy = a.y - bv.y;
            let w = [dx >= two_r, dy >= two_r, dx <= -two_r, dy <= -two_r];
            pair[p * t_len + s] = w;
            let push = |out: &mut Collector, family, magnitude| {
                out.0.push(Violation {
                    family,
                    vehicle_i: i,
                    vehicle_j: Some(j),
                    t: s,
                    magnitude,
                })
            };
            if !w.iter().any(|&v| v) {
                push(&mut out, "pair_disjunction", two_r - dx.abs().max(dy.abs()));
                continue;
            }
            let [cx, cy, ddx, ddy] = w.map(b);
            let literal = [
                ("bigm_sep_cx", dx >= two_r * cx - m * (1.0 - cx) - tol),
                ("bigm_sep_cy", dy >= two_r * cy - m * (1.0 - cy) - tol),
                ("bigm_sep_dx", dx <= -two_r * ddx + m * (1.0 - ddx) + tol),
                ("bigm_sep_dy", dy <= -two_r * ddy + m * (1.0 - ddy) + tol),
            ];
            for (family, ok) in literal {
                if !ok {
                    push(&mut out, family, dx.abs().max(dy.abs()));
                }
            }
        }
    }

    let witness = out.0.is_empty().then(|| Witness {
        n_vehicles: n,
        n_steps: t_len,
        grid,
        corridor,
        pair,
    });
    Ok(CheckReport {
        violations: out.0,
        witness,
    })
}

/// Whether `values` satisfy every row of `model` up to `slack`.
pub fn model_feasible(model: &MiqpModel, values: &[f64], slack: f64) -> bool {
    model.constraints.iter().all(|r| r.satisfied(values, slack))
}
