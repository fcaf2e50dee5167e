use std::fs;
use std::path::Path;

use crate::env::{EnvConfig, GridLayout, Route, Scenario};
use crate::error::{Error, Result};
use crate::trpo::{BaselineKind, TrainConfig};

use super::fmt_f64;

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            Error::parse(line, format!("expected `key = value`, got {content:?}"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::parse(line, "empty key"));
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(e: &Entry<'_>) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| Error::parse(e.line, format!("bad value for `{}`: {:?}", e.key, e.value)))
}

fn flag(e: &Entry<'_>) -> Result<bool> {
    match e.value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(
            e.line,
            format!("bad boolean for `{}`: {:?}", e.key, e.value),
        )),
    }
}

fn duplicate(seen: &mut Vec<String>, e: &Entry<'_>) -> Result<()> {
    if seen.iter().any(|k| k == e.key) {
        return Err(Error::parse(e.line, format!("duplicate key `{}`", e.key)));
    }
    seen.push(e.key.to_string());
    Ok(())
}

fn need<T>(v: Option<T>, name: &str, end: usize) -> Result<T> {
    v.ok_or_else(|| Error::parse(end, format!("missing `{name}`")))
}

fn end_line(text: &str) -> usize {
    text.lines().count().max(1)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Parses a scenario file. Required keys: `rows`, `cols`, `block_width`,
/// `block_height`, `street_width`; one `vehicle = s_r,s_c,d_r,d_c` line per
/// vehicle. `x_min`, `x_max`, `y_min`, `y_max` override the default area.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut rows = None;
    let mut cols = None;
    let mut bw = None;
    let mut bh = None;
    let mut street = None;
    let mut area: [Option<f64>; 4] = [None; 4];
    let mut vehicles = Vec::new();
    let mut seen = Vec::new();
    for e in entries(text)? {
        if e.key != "vehicle" {
            duplicate(&mut seen, &e)?;
        }
        match e.key {
            "rows" => rows = Some(number::<u32>(&e)?),
            "cols" => cols = Some(number::<u32>(&e)?),
            "block_width" => bw = Some(number::<f64>(&e)?),
            "block_height" => bh = Some(number::<f64>(&e)?),
            "street_width" => street = Some(number::<f64>(&e)?),
            "x_min" => area[0] = Some(number(&e)?),
            "x_max" => area[1] = Some(number(&e)?),
            "y_min" => area[2] = Some(number(&e)?),
            "y_max" => area[3] = Some(number(&e)?),
            "vehicle" => {
                let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(Error::parse(e.line, "vehicle needs s_r,s_c,d_r,d_c"));
                }
                let mut idx = [0i64; 4];
                for (slot, p) in idx.iter_mut().zip(&parts) {
                    *slot = p
                        .parse()
                        .map_err(|_| Error::parse(e.line, format!("bad index {p:?}")))?;
                }
                let route = Route::new(idx[0], idx[1], idx[2], idx[3]);
                vehicles.push((e.line, route));
            }
            other => return Err(Error::parse(e.line, format!("unknown key `{other}`"))),
        }
    }
    let end = end_line(text);
    let mut layout = GridLayout::new(
        need(rows, "rows", end)?,
        need(cols, "cols", end)?,
        need(bw, "block_width", end)?,
        need(bh, "block_height", end)?,
        need(street, "street_width", end)?,
    )
    .map_err(|e| Error::parse(end, e.to_string()))?;
    if let Some(v) = area[0] {
        layout.x_min = v;
    }
    if let Some(v) = area[1] {
        layout.x_max = v;
    }
    if let Some(v) = area[2] {
        layout.y_min = v;
    }
    if let Some(v) = area[3] {
        layout.y_max = v;
    }
    layout
        .validate()
        .map_err(|e| Error::parse(end, e.to_string()))?;
    for (line, route) in &vehicles {
        if !layout.contains_index(route.source_row, route.source_col)
            || !layout.contains_index(route.dest_row, route.dest_col)
        {
            return Err(Error::parse(
                *line,
                "vehicle intersection index out of range",
            ));
        }
    }
    let lines: Vec<usize> = vehicles.iter().map(|(l, _)| *l).collect();
    Scenario::new(layout, vehicles.into_iter().map(|(_, r)| r).collect()).map_err(|e| {
        // Scenario validation reports the vehicle index; map it back to its line.
        let msg = e.to_string();
        let line = msg
            .split("vehicle ")
            .nth(1)
            .and_then(|rest| rest.split(':').next())
            .and_then(|i| i.parse::<usize>().ok())
            .and_then(|i| lines.get(i).copied())
            .unwrap_or(end);
        Error::parse(line, msg)
    })
}

pub fn scenario_to_string(s: &Scenario) -> String {
    let l = &s.layout;
    let mut out = format!(
        "rows = {}\ncols = {}\nblock_width = {}\nblock_height = {}\nstreet_width = {}\nx_min = {}\nx_max = {}\ny_min = {}\ny_max = {}\n",
        l.rows,
        l.cols,
        fmt_f64(l.block_width),
        fmt_f64(l.block_height),
        fmt_f64(l.street_width),
        fmt_f64(l.x_min),
        fmt_f64(l.x_max),
        fmt_f64(l.y_min),
        fmt_f64(l.y_max)
    );
    for v in &s.vehicles {
        out += &format!(
            "vehicle = {},{},{},{}\n",
            v.source_row, v.source_col, v.dest_row, v.dest_col
        );
    }
    out
}

/// Parses an environment config; missing keys keep their defaults, and an
/// unset `boundary_margin` follows `0.25 * safe_radius`.
pub fn parse_env_config(text: &str) -> Result<EnvConfig> {
    let mut cfg = EnvConfig::default();
    let mut margin = None;
    let mut seen = Vec::new();
    for e in entries(text)? {
        duplicate(&mut seen, &e)?;
        match e.key {
            "gamma" => cfg.gamma = number(&e)?,
            "alpha" => cfg.alpha = number(&e)?,
            "eta" => cfg.eta = number(&e)?,
            "v_max" => cfg.v_max = number(&e)?,
            "a_max" => cfg.a_max = number(&e)?,
            "dt" => cfg.dt = number(&e)?,
            "max_episode_len" => cfg.max_episode_len = number(&e)?,
            "safe_radius" => cfg.safe_radius = number(&e)?,
            "boundary_margin" => margin = Some(number(&e)?),
            "resolve_iters" => cfg.resolve_iters = number(&e)?,
            other => return Err(Error::parse(e.line, format!("unknown key `{other}`"))),
        }
    }
    cfg.boundary_margin = margin.unwrap_or(0.25 * cfg.safe_radius);
    cfg.validate()
        .map_err(|e| Error::parse(end_line(text), e.to_string()))?;
    Ok(cfg)
}

pub fn env_config_to_string(c: &EnvConfig) -> String {
    format!(
        "gamma = {}\nalpha = {}\neta = {}\nv_max = {}\na_max = {}\ndt = {}\nmax_episode_len = {}\nsafe_radius = {}\nboundary_margin = {}\nresolve_iters = {}\n",
        fmt_f64(c.gamma),
        fmt_f64(c.alpha),
        fmt_f64(c.eta),
        fmt_f64(c.v_max),
        fmt_f64(c.a_max),
        fmt_f64(c.dt),
        c.max_episode_len,
        fmt_f64(c.safe_radius),
        fmt_f64(c.boundary_margin),
        c.resolve_iters
    )
}

/// Parses a training config; missing keys keep their defaults.
pub fn parse_train_config(text: &str) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    let mut seen = Vec::new();
    for e in entries(text)? {
        duplicate(&mut seen, &e)?;
        match e.key {
            "batch_steps" => cfg.batch_steps = number(&e)?,
            "n_iterations" => cfg.n_iterations = number(&e)?,
            "kl_step" => cfg.kl_step = number(&e)?,
            "cg_iters" => cfg.cg_iters = number(&e)?,
            "cg_damping" => cfg.cg_damping = number(&e)?,
            "cg_tol" => cfg.cg_tol = number(&e)?,
            "backtracks" => cfg.backtracks = number(&e)?,
            "backtrack_ratio" => cfg.backtrack_ratio = number(&e)?,
            "advantage_normalization" => cfg.advantage_normalization = flag(&e)?,
            "baseline" => {
                cfg.baseline = match e.value {
                    "linear" => BaselineKind::Linear,
                    "none" => BaselineKind::None,
                    v => return Err(Error::parse(e.line, format!("unknown baseline {v:?}"))),
                }
            }
            "learn_std" => cfg.learn_std = flag(&e)?,
            "init_std" => cfg.init_std = Some(number(&e)?),
            "hidden" => {
                cfg.hidden = if e.value.is_empty() {
                    Vec::new()
                } else {
                    e.value
                        .split(',')
                        .map(|w| {
                            w.trim()
                                .parse()
                                .map_err(|_| Error::parse(e.line, format!("bad width {w:?}")))
                        })
                        .collect::<Result<_>>()?
                }
            }
            "seed" => cfg.seed = number(&e)?,
            "checkpoint_every" => cfg.checkpoint_every = number(&e)?,
            other => return Err(Error::parse(e.line, format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()
        .map_err(|e| Error::parse(end_line(text), e.to_string()))?;
    Ok(cfg)
}

pub fn train_config_to_string(c: &TrainConfig) -> String {
    let hidden: Vec<String> = c.hidden.iter().map(|w| w.to_string()).collect();
    let mut out = format!(
        "batch_steps = {}\nn_iterations = {}\nkl_step = {}\ncg_iters = {}\ncg_damping = {}\ncg_tol = {}\nbacktracks = {}\nbacktrack_ratio = {}\nadvantage_normalization = {}\nbaseline = {}\nlearn_std = {}\nhidden = {}\nseed = {}\ncheckpoint_every = {}\n",
        c.batch_steps,
        c.n_iterations,
        fmt_f64(c.kl_step),
        c.cg_iters,
        fmt_f64(c.cg_damping),
        fmt_f64(c.cg_tol),
        c.backtracks,
        fmt_f64(c.backtrack_ratio),
        c.advantage_normalization,
        match c.baseline {
            BaselineKind::Linear => "linear",
            BaselineKind::None => "none",
        },
        c.learn_std,
        hidden.join(","),
        c.seed,
        c.checkpoint_every
    );
    if let Some(std) = c.init_std {
        out += &format!("init_std = {}\n", fmt_f64(std));
    }
    out
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&read_text(path.as_ref())?)
}

pub fn read_env_config(path: impl AsRef<Path>) -> Result<EnvConfig> {
    parse_env_config(&read_text(path.as_ref())?)
}

pub fn read_train_config(path: impl AsRef<Path>) -> Result<TrainConfig> {
    parse_train_config(&read_text(path.as_ref())?)
}
