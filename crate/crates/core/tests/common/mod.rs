//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the simulator or the big-M witness builder; the
//! reference stepper is written from the step contract alone and the MIQP
//! oracle only reads the emitted model rows.
#![allow(dead_code)]

pub mod checks;

use std::collections::BTreeMap;

use gridflow::env::{EnvConfig, GridLayout, Route, Scenario, VehicleEvent, PAIR_TOLERANCE};
use gridflow::io::{TrajRow, TrajectoryTable};
use gridflow::miqp::{MiqpModel, Sense, VarKind, CHECK_TOL};
use rand::seq::SliceRandom;
use rand::Rng;

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// What the reference step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RefStep {
    pub state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub truncated: bool,
    pub boundary: usize,
    pub pair: usize,
    pub unresolved: bool,
    pub per_vehicle: Vec<VehicleEvent>,
}

fn street_centers(count: u32, spacing: f64) -> Vec<f64> {
    let m = (count / 2) as i64;
    (-m..=m).map(|k| k as f64 * spacing).collect()
}

fn in_area(l: &GridLayout, x: f64, y: f64) -> bool {
    (l.x_min..=l.x_max).contains(&x) && (l.y_min..=l.y_max).contains(&y)
}

/// Inside the area and within `l/2 - R` of some centerline.
pub fn legal(l: &GridLayout, r_safe: f64, x: f64, y: f64) -> bool {
    let reach = l.street_width / 2.0 - r_safe;
    in_area(l, x, y)
        && (street_centers(l.cols, l.block_width)
            .iter()
            .any(|c| (x - c).abs() <= reach)
            || street_centers(l.rows, l.block_height)
                .iter()
                .any(|r| (y - r).abs() <= reach))
}

/// Closest point lying `margin` deep in a corridor. Vertical streets are
/// scanned before horizontal ones and the first strict minimum is kept.
pub fn nearest_corridor_point(
    l: &GridLayout,
    r_safe: f64,
    margin: f64,
    x: f64,
    y: f64,
) -> (f64, f64) {
    let reach = l.street_width / 2.0 - r_safe - margin;
    let mut candidates = Vec::new();
    for c in street_centers(l.cols, l.block_width) {
        let px = clamp(clamp(x, c - reach, c + reach), l.x_min, l.x_max);
        candidates.push((px, clamp(y, l.y_min, l.y_max)));
    }
    for r in street_centers(l.rows, l.block_height) {
        let py = clamp(clamp(y, r - reach, r + reach), l.y_min, l.y_max);
        candidates.push((clamp(x, l.x_min, l.x_max), py));
    }
    let mut best = candidates[0];
    let mut best_d = f64::INFINITY;
    for p in candidates {
        let d = (p.0 - x).powi(2) + (p.1 - y).powi(2);
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

pub fn destination(sc: &Scenario, i: usize) -> (f64, f64) {
    let v = &sc.vehicles[i];
    (
        v.dest_col as f64 * sc.layout.block_width,
        v.dest_row as f64 * sc.layout.block_height,
    )
}

/// One step of the documented contract: saturate the command, move with the
/// old velocity, update the velocity, stop and re-place vehicles that left
/// their corridor, then push overlapping pairs apart symmetrically for up to
/// `resolve_iters` passes, re-placing pushed vehicles after each pass.
pub fn reference_step(
    sc: &Scenario,
    cfg: &EnvConfig,
    state: &[f64],
    t: usize,
    action: &[f64],
) -> RefStep {
    let l = &sc.layout;
    let n = sc.vehicles.len();
    let h = cfg.dt;
    let mut s = state.to_vec();
    for i in 0..n {
        let a = [
            clamp(action[2 * i], -cfg.a_max, cfg.a_max),
            clamp(action[2 * i + 1], -cfg.a_max, cfg.a_max),
        ];
        let (x, y, vx, vy) = (
            state[4 * i],
            state[4 * i + 1],
            state[4 * i + 2],
            state[4 * i + 3],
        );
        s[4 * i] = clamp(x + h * vx, l.x_min, l.x_max);
        s[4 * i + 1] = clamp(y + h * vy, l.y_min, l.y_max);
        s[4 * i + 2] = clamp(vx + h * a[0], -cfg.v_max, cfg.v_max);
        s[4 * i + 3] = clamp(vy + h * a[1], -cfg.v_max, cfg.v_max);
    }

    let mut per_vehicle = vec![VehicleEvent::None; n];
    let mut boundary = 0;
    let mut replace = |s: &mut Vec<f64>, i: usize, per_vehicle: &mut Vec<VehicleEvent>| {
        let (x, y) = (s[4 * i], s[4 * i + 1]);
        if legal(l, cfg.safe_radius, x, y) {
            return;
        }
        let (px, py) = nearest_corridor_point(l, cfg.safe_radius, cfg.boundary_margin, x, y);
        s[4 * i..4 * i + 4].copy_from_slice(&[px, py, 0.0, 0.0]);
        boundary += 1;
        if per_vehicle[i] == VehicleEvent::None {
            per_vehicle[i] = VehicleEvent::Boundary;
        }
    };
    for i in 0..n {
        replace(&mut s, i, &mut per_vehicle);
    }

    let two_r = 2.0 * cfg.safe_radius;
    let mut pair = 0;
    for _ in 0..cfg.resolve_iters {
        let mut moved = vec![false; n];
        for i in 0..n {
            for j in i + 1..n {
                let dx = s[4 * j] - s[4 * i];
                let dy = s[4 * j + 1] - s[4 * i + 1];
                let d = dx.hypot(dy);
                if d >= two_r - PAIR_TOLERANCE {
                    continue;
                }
                let (ux, uy) = if d > 0.0 {
                    (dx / d, dy / d)
                } else {
                    (1.0, 0.0)
                };
                let push = (two_r - d) / 2.0;
                s[4 * i] -= push * ux;
                s[4 * i + 1] -= push * uy;
                s[4 * j] += push * ux;
                s[4 * j + 1] += push * uy;
                for k in [i, j] {
                    s[4 * k + 2] = 0.0;
                    s[4 * k + 3] = 0.0;
                    per_vehicle[k] = VehicleEvent::Pair;
                    moved[k] = true;
                }
                pair += 1;
            }
        }
        if !moved.contains(&true) {
            break;
        }
        for k in 0..n {
            if moved[k] {
                replace(&mut s, k, &mut per_vehicle);
            }
        }
    }
    let mut closest = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            closest = closest.min((s[4 * j] - s[4 * i]).hypot(s[4 * j + 1] - s[4 * i + 1]));
        }
    }

    let dists: Vec<f64> = (0..n)
        .map(|i| {
            let (gx, gy) = destination(sc, i);
            (s[4 * i] - gx).hypot(s[4 * i + 1] - gy)
        })
        .collect();
    let done = dists.iter().all(|&d| d < cfg.eta);
    let mut penalty = 0.0;
    for d in &dists {
        penalty += d;
    }
    RefStep {
        state: s,
        reward: if done { 1.0 } else { -cfg.alpha * penalty },
        done,
        truncated: !done && t + 1 >= cfg.max_episode_len,
        boundary,
        pair,
        unresolved: closest < two_r - PAIR_TOLERANCE,
        per_vehicle,
    }
}

/// A random grid with up to `max_vehicles` vehicles on distinct sources.
pub fn random_scenario<R: Rng>(rng: &mut R, max_vehicles: usize) -> Scenario {
    let rows = rng.random_range(1..=4u32);
    let cols = rng.random_range(1..=4u32);
    let bw = [0.5, 1.0, 1.5][rng.random_range(0..3)];
    let bh = [0.5, 1.0, 1.5][rng.random_range(0..3)];
    let layout = GridLayout::new(rows, cols, bw, bh, 0.2).unwrap();
    let mut cells: Vec<(i64, i64)> = layout
        .row_range()
        .flat_map(|r| layout.col_range().map(move |c| (r, c)))
        .collect();
    cells.shuffle(rng);
    let n = rng.random_range(1..=max_vehicles).min(cells.len());
    let vehicles = (0..n)
        .map(|k| {
            let (dr, dc) = cells[rng.random_range(0..cells.len())];
            Route::new(cells[k].0, cells[k].1, dr, dc)
        })
        .collect();
    Scenario::new(layout, vehicles).unwrap()
}

pub fn random_config<R: Rng>(rng: &mut R) -> EnvConfig {
    EnvConfig {
        dt: [0.01, 0.02, 0.05][rng.random_range(0..3)],
        resolve_iters: [1, 3, 10][rng.random_range(0..3)],
        max_episode_len: rng.random_range(5..=200),
        ..EnvConfig::default()
    }
}

/// A point in some corridor, near its edge half of the time.
pub fn corridor_point<R: Rng>(rng: &mut R, l: &GridLayout, r_safe: f64) -> (f64, f64) {
    let reach = l.street_width / 2.0 - r_safe;
    let off = if rng.random_bool(0.5) {
        rng.random_range(-reach..=reach)
    } else {
        let edge = if rng.random_bool(0.5) { reach } else { -reach };
        edge + rng.random_range(-1e-3..1e-3)
    };
    if rng.random_bool(0.5) {
        let cs = street_centers(l.cols, l.block_width);
        let c = cs[rng.random_range(0..cs.len())];
        (
            clamp(c + off, l.x_min, l.x_max),
            rng.random_range(l.y_min..=l.y_max),
        )
    } else {
        let rs = street_centers(l.rows, l.block_height);
        let r = rs[rng.random_range(0..rs.len())];
        (
            rng.random_range(l.x_min..=l.x_max),
            clamp(r + off, l.y_min, l.y_max),
        )
    }
}

/// Positions mixing corridor points, anywhere-in-area points and near
/// neighbours of earlier vehicles (around the `2R` contact distance).
pub fn random_positions<R: Rng>(
    rng: &mut R,
    l: &GridLayout,
    r_safe: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let u: f64 = rng.random();
        let p = if k > 0 && u < 0.35 {
            let (bx, by) = out[rng.random_range(0..k)];
            let two_r = 2.0 * r_safe;
            if rng.random_bool(0.5) {
                let ang = rng.random_range(0.0..std::f64::consts::TAU);
                let d = two_r * rng.random_range(0.0..1.5);
                (bx + d * ang.cos(), by + d * ang.sin())
            } else {
                // Axis-aligned offset close to the contact distance.
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let along = sign * (two_r + rng.random_range(-1e-3..1e-3));
                let across = rng.random_range(-two_r..two_r);
                if rng.random_bool(0.5) {
                    (bx + along, by + across)
                } else {
                    (bx + across, by + along)
                }
            }
        } else if u < 0.8 {
            corridor_point(rng, l, r_safe)
        } else {
            (
                rng.random_range(l.x_min..=l.x_max),
                rng.random_range(l.y_min..=l.y_max),
            )
        };
        out.push((clamp(p.0, l.x_min, l.x_max), clamp(p.1, l.y_min, l.y_max)));
    }
    out
}

/// A random state vector `(x, y, vx, vy)` per vehicle.
pub fn random_state<R: Rng>(rng: &mut R, sc: &Scenario, cfg: &EnvConfig) -> Vec<f64> {
    let pos = random_positions(rng, &sc.layout, cfg.safe_radius, sc.vehicles.len());
    let mut s = Vec::with_capacity(4 * pos.len());
    for (x, y) in pos {
        let v = cfg.v_max * 1.2;
        s.extend_from_slice(&[x, y, rng.random_range(-v..=v), rng.random_range(-v..=v)]);
    }
    s
}

pub fn random_action<R: Rng>(rng: &mut R, n: usize, a_max: f64) -> Vec<f64> {
    (0..2 * n)
        .map(|_| rng.random_range(-1.5 * a_max..=1.5 * a_max))
        .collect()
}

/// A trajectory table with random kinematics; positions come from
/// [`random_positions`] at every step.
pub fn random_table<R: Rng>(
    rng: &mut R,
    sc: &Scenario,
    cfg: &EnvConfig,
    steps: usize,
) -> TrajectoryTable {
    let n = sc.vehicles.len();
    let mut rows = Vec::with_capacity(n * steps);
    for _ in 0..steps {
        for (x, y) in random_positions(rng, &sc.layout, cfg.safe_radius, n) {
            rows.push(TrajRow {
                x,
                y,
                vx: rng.random_range(-cfg.v_max..=cfg.v_max),
                vy: rng.random_range(-cfg.v_max..=cfg.v_max),
                ax: rng.random_range(-cfg.a_max..=cfg.a_max),
                ay: rng.random_range(-cfg.a_max..=cfg.a_max),
                event: VehicleEvent::None,
            });
        }
    }
    TrajectoryTable::new(n, steps, rows).unwrap()
}

fn row_holds(terms: &[(usize, f64)], sense: Sense, rhs: f64, values: &[f64]) -> bool {
    let mut lhs = 0.0;
    for &(j, a) in terms {
        lhs += a * values[j];
    }
    match sense {
        Sense::Le => lhs <= rhs + CHECK_TOL,
        Sense::Ge => lhs >= rhs - CHECK_TOL,
        Sense::Eq => (lhs - rhs).abs() <= CHECK_TOL,
    }
}

/// Continuous model values read from the table by variable name.
pub fn continuous_values(model: &MiqpModel, table: &TrajectoryTable) -> Vec<f64> {
    let mut values = vec![0.0; model.variables.len()];
    for i in 0..table.n_vehicles() {
        for t in 0..table.n_steps() {
            let row = table.get(t, i);
            let mut put = |name: String, v: f64| {
                if let Some(k) = model.variable_index(&name) {
                    values[k] = v;
                }
            };
            put(format!("x_{i}_{t}"), row.x);
            put(format!("y_{i}_{t}"), row.y);
            put(format!("vx_{i}_{t}"), row.vx);
            put(format!("vy_{i}_{t}"), row.vy);
            put(format!("ax_{i}_{t}"), row.ax);
            put(format!("ay_{i}_{t}"), row.ay);
        }
    }
    values
}

/// Whether the corridor and separation rows admit some integer assignment
/// once the continuous variables are fixed from `table`.
///
/// Rows are grouped by their `(vehicle[, vehicle], t)` suffix; each group
/// touches its own integers only, so the groups are searched independently
/// by trying every value in every integer's bound range.
pub fn enumeration_feasible(model: &MiqpModel, table: &TrajectoryTable) -> bool {
    let mut values = continuous_values(model, table);
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (k, row) in model.constraints.iter().enumerate() {
        let key = if let Some(rest) = row.name.strip_prefix("corr_") {
            rest.split_once('_').map(|(_, s)| format!("corr_{s}"))
        } else if let Some(rest) = row.name.strip_prefix("sep_") {
            rest.split_once('_').map(|(_, s)| format!("sep_{s}"))
        } else {
            None
        };
        if let Some(key) = key {
            groups.entry(key).or_default().push(k);
        }
    }
    for rows in groups.values() {
        let mut ints: Vec<usize> = rows
            .iter()
            .flat_map(|&k| model.constraints[k].terms.iter().map(|&(j, _)| j))
            .filter(|&j| model.variables[j].kind != VarKind::Continuous)
            .collect();
        ints.sort_unstable();
        ints.dedup();
        let ranges: Vec<Vec<f64>> = ints
            .iter()
            .map(|&j| {
                let v = &model.variables[j];
                let (lo, hi) = (v.lower.round() as i64, v.upper.round() as i64);
                (lo..=hi).map(|z| z as f64).collect()
            })
            .collect();
        let mut idx = vec![0usize; ints.len()];
        let mut found = false;
        loop {
            for (p, &j) in ints.iter().enumerate() {
                values[j] = ranges[p][idx[p]];
            }
            if rows.iter().all(|&k| {
                let r = &model.constraints[k];
                row_holds(&r.terms, r.sense, r.rhs, &values)
            }) {
                found = true;
                break;
            }
            // Odometer increment.
            let mut p = 0;
            while p < idx.len() {
                idx[p] += 1;
                if idx[p] < ranges[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == idx.len() {
                break;
            }
        }
        if !found {
            return false;
        }
    }
    true
}

/// Central finite difference of `f` along every coordinate of `x`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|k| {
            p[k] = x[k] + h;
            let up = f(&p);
            p[k] = x[k] - h;
            let down = f(&p);
            p[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max |a - b| / max(max |b|, floor)`.
pub fn rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let scale = b.iter().fold(floor, |m, v| m.max(v.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}
