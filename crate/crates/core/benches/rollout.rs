//! Sequential vs rayon executor on the two hot loops: episode collection and
//! Fisher-vector products over a collected batch.
//!
//! `cargo bench -p gridflow --bench rollout`; build with
//! `--no-default-features` to see the sequential fallback alone.

use std::hint::black_box;
use std::thread;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gridflow::env::{Env, EnvConfig, GridLayout, Route, Scenario};
use gridflow::par::Executor;
use gridflow::policy::init_policy;
use gridflow::trpo::{collect_rollouts, fisher_vector_product};

fn desk_env() -> Env {
    let layout = GridLayout::new(2, 2, 1.0, 1.0, 0.2).unwrap();
    let scenario = Scenario::new(
        layout,
        vec![Route::new(-1, -1, -1, 0), Route::new(1, 1, 0, 1)],
    )
    .unwrap();
    Env::new(scenario, EnvConfig::default()).unwrap()
}

fn executors() -> Vec<(String, Executor)> {
    let cpus = thread::available_parallelism()
        .map_or(2, |n| n.get())
        .max(2);
    vec![
        ("sequential".to_string(), Executor::sequential()),
        (format!("rayon-{cpus}"), Executor::new(cpus)),
    ]
}

fn bench_rollouts(c: &mut Criterion) {
    let env = desk_env();
    let policy = init_policy(2, &[100, 100, 100], 0, 9.0).unwrap();
    let mut group = c.benchmark_group("collect_rollouts");
    group.sample_size(10);
    for steps in [2_000, 10_000] {
        for (name, exec) in &executors() {
            group.bench_with_input(
                BenchmarkId::new(name.as_str(), steps),
                &steps,
                |b, &steps| {
                    b.iter(|| black_box(collect_rollouts(&env, &policy, steps, 7, exec).unwrap()))
                },
            );
        }
    }
    group.finish();
}

fn bench_fvp(c: &mut Criterion) {
    let env = desk_env();
    let policy = init_policy(2, &[100, 100, 100], 0, 9.0).unwrap();
    let batch = collect_rollouts(&env, &policy, 10_000, 7, &Executor::sequential()).unwrap();
    let v: Vec<f64> = (0..policy.num_params()).map(|k| (k as f64).sin()).collect();
    let mut group = c.benchmark_group("fisher_vector_product");
    group.sample_size(10);
    for (name, exec) in &executors() {
        group.bench_function(name.as_str(), |b| {
            b.iter(|| black_box(fisher_vector_product(&batch, &policy, &v, 0.1, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rollouts, bench_fvp);
criterion_main!(benches);
