mod common;

use common::checks::{invariant_sweep, step_disagreements};
use common::{random_action, reference_step};
use gridflow::env::{Env, EnvState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn step_matches_reference_on_random_pairs() {
    assert_eq!(step_disagreements(7, 1000), 0);
}

#[test]
fn step_matches_reference_with_crowded_vehicles() {
    // Many vehicles on a single street force multi-pass pair resolution.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let layout = gridflow::env::GridLayout::new(1, 5, 0.5, 0.5, 0.2).unwrap();
    let routes = (-2..=2)
        .map(|c| gridflow::env::Route::new(0, c, 0, -c))
        .collect();
    let sc = gridflow::env::Scenario::new(layout, routes).unwrap();
    let cfg = gridflow::env::EnvConfig::default();
    let env = Env::new(sc.clone(), cfg.clone()).unwrap();
    for _ in 0..500 {
        let mut state = Vec::new();
        let x0 = rng.random_range(-0.5..0.5);
        for k in 0..5 {
            let x = x0 + 0.03 * k as f64 + rng.random_range(-0.01..0.01);
            state.extend_from_slice(&[x, rng.random_range(-0.06..0.06), 0.0, 0.0]);
        }
        let action = random_action(&mut rng, 5, cfg.a_max);
        let got = env
            .step(&EnvState::from_values(state.clone(), 0).unwrap(), &action)
            .unwrap();
        let want = reference_step(&sc, &cfg, &state, 0, &action);
        assert_eq!(got.next_state.as_slice(), want.state.as_slice());
        assert_eq!(got.events.pair, want.pair);
        assert_eq!(got.events.boundary, want.boundary);
    }
}

#[test]
fn invariants_hold_over_random_steps() {
    let sweep = invariant_sweep(3, 100_000);
    eprintln!("{sweep:?}");
    assert_eq!(sweep.silent, 0);
}
