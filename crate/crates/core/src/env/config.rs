use crate::error::{Error, Result};

/// Environment parameters. Defaults follow the experiment settings: γ = 0.999,
/// α = 0.1, η = 0.05, v_m = 0.8, a_m = 30, h = 10 ms, 200-step episodes and a
/// safe radius of 0.02 (normalized units).
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Distance penalty factor of the shaping reward.
    pub alpha: f64,
    /// Arrival tolerance.
    pub eta: f64,
    /// Per-axis speed limit.
    pub v_max: f64,
    /// Per-axis acceleration limit.
    pub a_max: f64,
    /// Sampling time in seconds.
    pub dt: f64,
    pub max_episode_len: usize,
    pub safe_radius: f64,
    /// How far inside the corridor a vehicle is placed after a boundary stop.
    pub boundary_margin: f64,
    /// Passes of pairwise collision resolution per step.
    pub resolve_iters: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let safe_radius = 0.02;
        EnvConfig {
            gamma: 0.999,
            alpha: 0.1,
            eta: 0.05,
            v_max: 0.8,
            a_max: 30.0,
            dt: 0.01,
            max_episode_len: 200,
            safe_radius,
            boundary_margin: 0.25 * safe_radius,
            resolve_iters: 10,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("eta", self.eta),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
            ("dt", self.dt),
            ("safe_radius", self.safe_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0")));
            }
        }
        if !(self.boundary_margin > 0.0 && self.boundary_margin < self.safe_radius) {
            return bad("boundary_margin must be in (0, safe_radius)");
        }
        if self.resolve_iters < 1 {
            return bad("resolve_iters must be >= 1");
        }
        if self.max_episode_len < 1 {
            return bad("max_episode_len must be >= 1");
        }
        Ok(())
    }
}
