//! Trains the two-vehicle desk-scale scenario and prints per-iteration stats.
//!
//! `cargo run --release -p gridflow --example desk_train -- <seed> <iterations>`

use std::time::Instant;

use gridflow::env::{Env, EnvConfig, GridLayout, Route, Scenario};
use gridflow::par::Executor;
use gridflow::trpo::{TrainConfig, Trainer};

fn main() -> gridflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let layout = GridLayout::new(2, 2, 1.0, 1.0, 0.2)?;
    let scenario = Scenario::new(
        layout,
        vec![Route::new(-1, -1, -1, 0), Route::new(1, 1, 0, 1)],
    )?;
    let env = Env::new(scenario, EnvConfig::default())?;
    let exec = Executor::from_env();
    let config = TrainConfig {
        seed,
        n_iterations: iterations,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(&env, config, &exec)?;
    let start = Instant::now();
    for _ in 0..iterations {
        let s = trainer.iterate()?;
        println!(
            "{:4} disc {:9.4} ret {:9.3} len {:6.1} nc {:6} tt {:6.3} kl {:.5} acc {} bt {} ({:.1}s)",
            s.iter,
            s.mean_disc_return,
            s.mean_return,
            s.mean_ep_len,
            s.near_collisions,
            s.total_travel_time,
            s.kl,
            s.accepted,
            s.backtracks,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
