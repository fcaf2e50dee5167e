mod common;

use common::checks::{binaries_vs_enumeration, count_mismatches, lp_round_trip_failures};
use common::{enumeration_feasible, random_config, random_scenario, random_table};
use gridflow::env::{Env, EnvConfig, GridLayout, Route, Scenario};
use gridflow::io::TrajectoryTable;
use gridflow::miqp::{assign_binaries, build_miqp, default_big_m, model_feasible, CHECK_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn witness_builder_agrees_with_enumeration() {
    let a = binaries_vs_enumeration(5, 1000);
    assert_eq!(a.disagreements, 0, "{a:?}");
    // Both outcomes must be exercised for the comparison to mean anything.
    assert!(a.feasible > 50 && a.feasible < 950, "{a:?}");
}

#[test]
fn witness_satisfies_its_own_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for _ in 0..300 {
        let sc = random_scenario(&mut rng, 3);
        let cfg = random_config(&mut rng);
        let steps = rng.random_range(2..=5);
        let table = random_table(&mut rng, &sc, &cfg, steps);
        let big_m = default_big_m(&sc.layout, cfg.safe_radius);
        let model = build_miqp(&sc, &cfg, steps, big_m).unwrap();
        if let Some(w) = assign_binaries(&table, &sc, &cfg, big_m).unwrap().witness {
            let values = w.model_values(&table);
            let mut disjunctive = model.clone();
            disjunctive
                .constraints
                .retain(|r| r.name.starts_with("corr_") || r.name.starts_with("sep_"));
            assert!(model_feasible(&disjunctive, &values, CHECK_TOL));
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn lp_round_trip_is_identity() {
    assert_eq!(lp_round_trip_failures(13, 200), 0);
}

#[test]
fn counts_match_closed_forms() {
    assert!(count_mismatches().is_empty());
}

#[test]
fn parked_rollout_is_feasible_for_both_checks() {
    // A zero-action rollout keeps every vehicle parked at its source, which
    // is corridor-legal and separated, so both sides must accept it.
    let layout = GridLayout::new(2, 2, 1.0, 1.0, 0.2).unwrap();
    let sc = Scenario::new(
        layout,
        vec![Route::new(-1, -1, -1, 0), Route::new(1, 1, 0, 1)],
    )
    .unwrap();
    let env = Env::new(sc.clone(), EnvConfig::default()).unwrap();
    let traj = gridflow::env::run_episode(&env, |_| Ok(vec![0.0; 4]), 4).unwrap();
    let table = TrajectoryTable::from_trajectory(&traj, &env);
    let big_m = default_big_m(&sc.layout, env.config().safe_radius);
    let model = build_miqp(&sc, env.config(), table.n_steps(), big_m).unwrap();
    assert!(enumeration_feasible(&model, &table));
    assert!(assign_binaries(&table, &sc, env.config(), big_m)
        .unwrap()
        .passed());
}
