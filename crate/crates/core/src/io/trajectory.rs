use std::io::Write;

use crate::env::{Env, Trajectory, VehicleEvent};
use crate::error::{Error, Result};

use super::fmt_f64;

pub const TRAJECTORY_HEADER: &str = "t,vehicle,x,y,vx,vy,ax,ay,event";

/// One vehicle at one time step. `ax, ay` is the realized acceleration
/// `(v[t+1] - v[t]) / dt` (zero on the last row) and `event` is what the
/// safety mechanism did to this vehicle on the step `t -> t+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajRow {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub event: VehicleEvent,
}

/// Rectangular per-step, per-vehicle table, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    n_vehicles: usize,
    n_steps: usize,
    rows: Vec<TrajRow>,
}

impl TrajectoryTable {
    pub fn new(n_vehicles: usize, n_steps: usize, rows: Vec<TrajRow>) -> Result<Self> {
        if rows.len() != n_vehicles * n_steps {
            return Err(Error::Format {
                offset: rows.len(),
                message: format!(
                    "expected {} rows for {n_vehicles} vehicles x {n_steps} steps",
                    n_vehicles * n_steps
                ),
            });
        }
        Ok(TrajectoryTable {
            n_vehicles,
            n_steps,
            rows,
        })
    }

    pub fn from_trajectory(traj: &Trajectory, env: &Env) -> Self {
        let n = env.n_vehicles();
        let h = env.config().dt;
        let mut rows = Vec::with_capacity(n * traj.states.len());
        for (t, s) in traj.states.iter().enumerate() {
            let next = traj.states.get(t + 1);
            for i in 0..n {
                let (x, y) = s.position(i);
                let (vx, vy) = s.velocity(i);
                let (ax, ay) = match next {
                    Some(ns) => {
                        let (nvx, nvy) = ns.velocity(i);
                        ((nvx - vx) / h, (nvy - vy) / h)
                    }
                    None => (0.0, 0.0),
                };
                let event = traj
                    .events
                    .get(t)
                    .map_or(VehicleEvent::None, |e| e.per_vehicle[i]);
                rows.push(TrajRow {
                    x,
                    y,
                    vx,
                    vy,
                    ax,
                    ay,
                    event,
                });
            }
        }
        TrajectoryTable {
            n_vehicles: n,
            n_steps: traj.states.len(),
            rows,
        }
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn get(&self, t: usize, vehicle: usize) -> &TrajRow {
        &self.rows[t * self.n_vehicles + vehicle]
    }

    pub fn get_mut(&mut self, t: usize, vehicle: usize) -> &mut TrajRow {
        &mut self.rows[t * self.n_vehicles + vehicle]
    }

    pub fn rows(&self) -> &[TrajRow] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(TRAJECTORY_HEADER);
        out.push('\n');
        for t in 0..self.n_steps {
            for i in 0..self.n_vehicles {
                let r = self.get(t, i);
                out += &format!(
                    "{t},{i},{},{},{},{},{},{},{}\n",
                    fmt_f64(r.x),
                    fmt_f64(r.y),
                    fmt_f64(r.vx),
                    fmt_f64(r.vy),
                    fmt_f64(r.ax),
                    fmt_f64(r.ay),
                    r.event.as_str()
                );
            }
        }
        out
    }
}

pub fn trajectory_csv(traj: &Trajectory, env: &Env) -> String {
    TrajectoryTable::from_trajectory(traj, env).to_csv()
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, env: &Env) -> Result<()> {
    w.write_all(trajectory_csv(traj, env).as_bytes())?;
    Ok(())
}

fn parse_event(s: &str) -> Option<VehicleEvent> {
    match s {
        "none" => Some(VehicleEvent::None),
        "boundary" => Some(VehicleEvent::Boundary),
        "pair" => Some(VehicleEvent::Pair),
        _ => None,
    }
}

/// Parses a trajectory CSV. Rows may come in any order but every
/// `(t, vehicle)` cell of the rectangle must appear exactly once.
pub fn read_trajectory_csv(text: &str) -> Result<TrajectoryTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::parse(
                1,
                format!("expected header `{TRAJECTORY_HEADER}`"),
            ))
        }
    }
    let mut cells = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 9 {
            return Err(Error::parse(
                line,
                format!("expected 9 fields, got {}", f.len()),
            ));
        }
        let t: usize = f[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad step {:?}", f[0])))?;
        let v: usize = f[1]
            .parse()
            .map_err(|_| Error::parse(line, format!("bad vehicle {:?}", f[1])))?;
        let mut vals = [0.0f64; 6];
        for (slot, s) in vals.iter_mut().zip(&f[2..8]) {
            *slot = s
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number {s:?}")))?;
            if !slot.is_finite() {
                return Err(Error::parse(line, format!("non-finite number {s:?}")));
            }
        }
        let event =
            parse_event(f[8]).ok_or_else(|| Error::parse(line, format!("bad event {:?}", f[8])))?;
        let row = TrajRow {
            x: vals[0],
            y: vals[1],
            vx: vals[2],
            vy: vals[3],
            ax: vals[4],
            ay: vals[5],
            event,
        };
        cells.push((line, t, v, row));
    }
    if cells.is_empty() {
        return Err(Error::parse(1, "no trajectory rows"));
    }
    let n_steps = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let n_vehicles = cells.iter().map(|c| c.2).max().unwrap_or(0) + 1;
    let mut slots: Vec<Option<TrajRow>> = vec![None; n_steps * n_vehicles];
    for (line, t, v, row) in cells {
        let slot = &mut slots[t * n_vehicles + v];
        if slot.is_some() {
            return Err(Error::parse(
                line,
                format!("duplicate row for t={t}, vehicle={v}"),
            ));
        }
        *slot = Some(row);
    }
    let mut rows = Vec::with_capacity(slots.len());
    for (k, s) in slots.into_iter().enumerate() {
        match s {
            Some(r) => rows.push(r),
            None => {
                return Err(Error::parse(
                    text.lines().count() + 1,
                    format!(
                        "missing row for t={}, vehicle={}",
                        k / n_vehicles,
                        k % n_vehicles
                    ),
                ))
            }
        }
    }
    TrajectoryTable::new(n_vehicles, n_steps, rows)
}
