//! Sweeps shared by the oracle tests and the acceptance report.

use super::{
    enumeration_feasible, legal, random_action, random_config, random_scenario, random_state,
    random_table, reference_step,
};
use gridflow::env::{Env, EnvConfig, EnvState, GridLayout, Route, Scenario};
use gridflow::miqp::{assign_binaries, build_miqp, default_big_m, emit_lp, parse_lp, ModelCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs `count` random (state, action) pairs through both steppers and
/// returns the number of disagreements.
pub fn step_disagreements(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for k in 0..count {
        let sc = random_scenario(&mut rng, 4);
        let cfg = random_config(&mut rng);
        let env = Env::new(sc.clone(), cfg.clone()).unwrap();
        let state = random_state(&mut rng, &sc, &cfg);
        let t = rng.random_range(0..cfg.max_episode_len);
        let action = random_action(&mut rng, sc.vehicles.len(), cfg.a_max);
        let got = env
            .step(&EnvState::from_values(state.clone(), t).unwrap(), &action)
            .unwrap();
        let want = reference_step(&sc, &cfg, &state, t, &action);
        let same = got.next_state.as_slice() == want.state.as_slice()
            && got.next_state.t == t + 1
            && got.reward == want.reward
            && got.done == want.done
            && got.truncated == want.truncated
            && got.events.boundary == want.boundary
            && got.events.pair == want.pair
            && got.events.unresolved == want.unresolved
            && got.events.per_vehicle == want.per_vehicle;
        if !same {
            if bad < 3 {
                eprintln!("case {k}: sim {got:?}\nref {want:?}\nstate {state:?} action {action:?}");
            }
            bad += 1;
        }
    }
    bad
}

/// Post-step invariant sweep over `steps` random-action steps from reset,
/// restarting each episode on termination.
#[derive(Debug, Default, PartialEq)]
pub struct Sweep {
    /// Steps breaking an invariant without the unresolved flag set.
    pub silent: usize,
    /// Steps where pair resolution ran out of passes and said so.
    pub flagged: usize,
    /// Flagged steps whose separation was still below `2R - 1e-9`.
    pub flagged_short: usize,
}

pub fn invariant_sweep(seed: u64, steps: usize) -> Sweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sweep = Sweep::default();
    let mut done = 0;
    while done < steps {
        let sc = random_scenario(&mut rng, 4);
        let cfg = EnvConfig {
            resolve_iters: 10,
            ..random_config(&mut rng)
        };
        let env = Env::new(sc.clone(), cfg.clone()).unwrap();
        let mut state = env.reset();
        let n = sc.vehicles.len();
        // A persistent bias per vehicle so episodes actually travel.
        let bias = random_action(&mut rng, n, cfg.a_max);
        for _ in 0..cfg.max_episode_len {
            let action: Vec<f64> = bias
                .iter()
                .map(|b| b + rng.random_range(-cfg.a_max..cfg.a_max))
                .collect();
            let out = env.step(&state, &action).unwrap();
            let s = out.next_state.as_slice();
            let mut kinematic = true;
            let mut separated = true;
            for i in 0..n {
                let (x, y, vx, vy) = (s[4 * i], s[4 * i + 1], s[4 * i + 2], s[4 * i + 3]);
                kinematic &= vx.abs() <= cfg.v_max && vy.abs() <= cfg.v_max;
                kinematic &= legal(&sc.layout, cfg.safe_radius, x, y);
                for j in i + 1..n {
                    let d = (s[4 * j] - x).hypot(s[4 * j + 1] - y);
                    separated &= d >= 2.0 * cfg.safe_radius - 1e-9;
                }
            }
            if out.events.unresolved {
                sweep.flagged += 1;
                sweep.flagged_short += usize::from(!separated);
            }
            if !kinematic || (!separated && !out.events.unresolved) {
                if sweep.silent < 3 {
                    eprintln!("invariant broken after step: {:?}", out);
                }
                sweep.silent += 1;
            }
            done += 1;
            state = out.next_state;
            if out.done || out.truncated || done >= steps {
                break;
            }
        }
    }
    sweep
}

/// Outcome of comparing the witness builder with exhaustive enumeration.
#[derive(Debug, Default)]
pub struct Agreement {
    pub cases: usize,
    pub feasible: usize,
    pub disagreements: usize,
}

pub fn binaries_vs_enumeration(seed: u64, cases: usize) -> Agreement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Agreement::default();
    for _ in 0..cases {
        let sc = random_scenario(&mut rng, 3);
        let cfg = random_config(&mut rng);
        let steps = rng.random_range(2..=5);
        let table = random_table(&mut rng, &sc, &cfg, steps);
        let big_m = default_big_m(&sc.layout, cfg.safe_radius);
        let model = build_miqp(&sc, &cfg, steps, big_m).unwrap();
        let report = assign_binaries(&table, &sc, &cfg, big_m).unwrap();
        let oracle = enumeration_feasible(&model, &table);
        out.cases += 1;
        out.feasible += usize::from(oracle);
        if report.passed() != oracle || report.witness.is_some() != oracle {
            out.disagreements += 1;
        }
    }
    out
}

/// Random models of every small size survive emit -> parse unchanged.
pub fn lp_round_trip_failures(seed: u64, cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let sc = random_scenario(&mut rng, 4);
        let cfg = random_config(&mut rng);
        let steps = rng.random_range(2..=6);
        let lower = gridflow::miqp::big_m_lower_bound(&sc.layout, cfg.safe_radius);
        let big_m = lower * rng.random_range(1.0..20.0);
        let model = build_miqp(&sc, &cfg, steps, big_m).unwrap();
        let text = emit_lp(&model);
        match parse_lp(&text) {
            Ok(back) if back == model && emit_lp(&back) == text => {}
            _ => bad += 1,
        }
    }
    bad
}

/// Sizes in the sweep whose built model disagrees with the closed-form counts.
pub fn count_mismatches() -> Vec<(usize, usize)> {
    let layout = GridLayout::new(4, 4, 1.0, 1.0, 0.2).unwrap();
    let cells = [(-2, -2), (-1, 0), (0, 1), (2, 2)];
    let cfg = EnvConfig::default();
    let mut bad = Vec::new();
    for n in 1..=4 {
        let routes = cells[..n]
            .iter()
            .map(|&(r, c)| Route::new(r, c, -r, -c))
            .collect();
        let sc = Scenario::new(layout.clone(), routes).unwrap();
        for t in 2..=6 {
            let model = build_miqp(&sc, &cfg, t, default_big_m(&layout, cfg.safe_radius)).unwrap();
            let expect = ModelCounts::closed_form(n, t);
            let pairs = n * (n - 1) / 2;
            let hand_vars = 4 * n * t + 2 * n * (t - 1) + 2 * n * t + 2 * n * t + 4 * pairs * t;
            let hand_rows = 6 * n + 4 * n * (t - 1) + 5 * n * t + 5 * pairs * t;
            if model.counts() != expect
                || expect.variables() != hand_vars
                || expect.constraints() != hand_rows
                || model.variables.len() != hand_vars
                || model.constraints.len() != hand_rows
            {
                bad.push((n, t));
            }
        }
    }
    bad
}
