use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gridflow::env::{Env, EnvConfig, Scenario};
use gridflow::eval::{evaluate, run_policy};
use gridflow::io::{self, TrajectoryTable};
use gridflow::miqp::{self, ObjectiveSense};
use gridflow::par::Executor;
use gridflow::policy::{load_policy, GaussianMlpPolicy};
use gridflow::trpo::{self, TrainConfig};
use gridflow::Error;

use crate::manifest::{Outputs, RunManifest};
use crate::SenseArg;

pub struct CliError {
    pub code: u8,
    pub message: String,
}

type CliResult<T> = Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

/// Errors while reading inputs are usage errors.
fn input<T>(r: gridflow::Result<T>, path: &Path) -> CliResult<T> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Errors during a run: bad arguments are usage errors, the rest runtime.
fn runtime<T>(r: gridflow::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError {
        code: match e {
            Error::InvalidArgument(_)
            | Error::InvalidLayout(_)
            | Error::Format { .. }
            | Error::Parse { .. } => 2,
            Error::Numeric(_) | Error::Io(_) => 1,
        },
        message: e.to_string(),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

fn load_env(scenario: &Path, config: Option<&Path>) -> CliResult<Env> {
    let s = input(io::read_scenario(scenario), scenario)?;
    let c = match config {
        Some(p) => input(io::read_env_config(p), p)?,
        None => EnvConfig::default(),
    };
    runtime(Env::new(s, c))
}

fn load_checked_policy(path: &Path, env: &Env) -> CliResult<GaussianMlpPolicy> {
    let policy = input(load_policy(path), path)?;
    if policy.input_dim() != env.state_dim() || policy.output_dim() != env.action_dim() {
        return Err(usage(format!(
            "{}: policy expects {} vehicles ({} -> {}), scenario has {}",
            path.display(),
            policy.input_dim() / 4,
            policy.input_dim(),
            policy.output_dim(),
            env.n_vehicles()
        )));
    }
    Ok(policy)
}

fn write_or_print(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

pub struct TrainArgs {
    pub scenario: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub train_config: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
}

pub fn train(args: TrainArgs) -> CliResult<u8> {
    let (scenario, env_config, mut train_config): (Scenario, EnvConfig, TrainConfig) =
        match &args.manifest {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let m: RunManifest = serde_json::from_str(&text)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                (
                    input(io::parse_scenario(&m.scenario), path)?,
                    input(io::parse_env_config(&m.env_config), path)?,
                    input(io::parse_train_config(&m.train_config), path)?,
                )
            }
            None => {
                let sp = args.scenario.as_deref().expect("clap requires --scenario");
                let scenario = input(io::read_scenario(sp), sp)?;
                let env_config = match &args.config {
                    Some(p) => input(io::read_env_config(p), p)?,
                    None => EnvConfig::default(),
                };
                let train_config = match &args.train_config {
                    Some(p) => input(io::read_train_config(p), p)?,
                    None => TrainConfig::default(),
                };
                (scenario, env_config, train_config)
            }
        };
    if let Some(seed) = args.seed {
        train_config.seed = seed;
    }
    if let Some(n) = args.iterations {
        train_config.n_iterations = n;
    }
    runtime(train_config.validate())?;
    let env = runtime(Env::new(scenario.clone(), env_config.clone()))?;

    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let manifest = RunManifest {
        tool: "gridflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "train".into(),
        seed: train_config.seed,
        scenario: io::scenario_to_string(&scenario),
        env_config: io::env_config_to_string(&env_config),
        train_config: io::train_config_to_string(&train_config),
        outputs: Outputs {
            metrics: "metrics.csv".into(),
            final_checkpoint: "policy_final.bin".into(),
            checkpoint_pattern: "policy_iter_<k>.bin".into(),
        },
    };
    let manifest_path = args.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(|e| io_err(&manifest_path, e))?;

    let exec = Executor::from_env();
    let outcome = runtime(trpo::train(&env, &train_config, &args.out, &exec, |s| {
        println!(
            "iter {:4}  return {:10.4}  near-collisions {:6}  travel {:8.3}  kl {:.5}",
            s.iter, s.mean_return, s.near_collisions, s.total_travel_time, s.kl
        );
    }))?;
    println!("metrics: {}", outcome.metrics_path.display());
    println!("policy: {}", outcome.final_checkpoint.display());
    Ok(0)
}

pub fn rollout(
    policy: &Path,
    scenario: &Path,
    config: Option<&Path>,
    horizon: usize,
    seed: u64,
    deterministic: bool,
    out: Option<&Path>,
) -> CliResult<u8> {
    if horizon < 1 {
        return Err(usage("--horizon must be >= 1"));
    }
    let env = load_env(scenario, config)?;
    let policy = load_checked_policy(policy, &env)?;
    let traj = runtime(run_policy(&env, &policy, horizon, deterministic, seed, 0))?;
    write_or_print(out, &io::trajectory_csv(&traj, &env))?;
    let mut report = String::new();
    for (i, t) in traj.travel_times(&env).iter().enumerate() {
        report += &format!("vehicle {i}: travel time {t:.2} s\n");
    }
    report += &format!(
        "steps: {}  reached: {}  near collisions: {}\n",
        traj.len(),
        traj.done,
        traj.near_collisions()
    );
    if out.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    Ok(0)
}

pub fn eval(
    policy: &Path,
    scenario: &Path,
    config: Option<&Path>,
    episodes: usize,
    horizon: usize,
    seed: u64,
    deterministic: bool,
) -> CliResult<u8> {
    if episodes < 1 {
        return Err(usage("--episodes must be >= 1"));
    }
    if horizon < 1 {
        return Err(usage("--horizon must be >= 1"));
    }
    let env = load_env(scenario, config)?;
    let policy = load_checked_policy(policy, &env)?;
    let s = runtime(evaluate(
        &env,
        &policy,
        episodes,
        horizon,
        deterministic,
        seed,
    ))?;
    println!("episodes: {}", s.episodes);
    println!("total travel time mean: {:.4} s", s.mean_travel_time());
    println!("total travel time min: {:.4} s", s.min_travel_time());
    println!("total travel time max: {:.4} s", s.max_travel_time());
    println!("success rate: {:.4}", s.success_rate);
    println!("near collisions: {}", s.near_collisions);
    println!(
        "lower bound: {:.4} s",
        gridflow::eval::travel_time_lower_bound(&env)
    );
    Ok(0)
}

pub fn export_miqp(
    scenario: &Path,
    config: Option<&Path>,
    horizon: usize,
    big_m: Option<f64>,
    sense: SenseArg,
    out: Option<&Path>,
) -> CliResult<u8> {
    let env = load_env(scenario, config)?;
    let (s, c) = (env.scenario(), env.config());
    let m = big_m.unwrap_or_else(|| miqp::default_big_m(&s.layout, c.safe_radius));
    let mut model = runtime(miqp::build_miqp(s, c, horizon, m))?;
    model.sense = match sense {
        SenseArg::Minimize => ObjectiveSense::Minimize,
        SenseArg::Maximize => ObjectiveSense::Maximize,
    };
    write_or_print(out, &miqp::emit_lp(&model))?;
    let k = model.counts();
    let report = format!(
        "variables: {} (continuous {}, integer {}, corridor binaries {}, pair binaries {})\n\
         constraints: {} (endpoint {}, dynamics {}, corridor {}, pair {})\n\
         big-M: {m}\n",
        k.variables(),
        k.continuous,
        k.integer,
        k.corridor_binaries,
        k.pair_binaries,
        k.constraints(),
        k.endpoint_rows,
        k.dynamics_rows,
        k.corridor_rows,
        k.pair_rows
    );
    if out.is_some() {
        print!("{report}");
    } else {
        eprint!("{report}");
    }
    Ok(0)
}

pub fn check(
    trajectory: &Path,
    scenario: &Path,
    config: Option<&Path>,
    big_m: Option<f64>,
    out: Option<&Path>,
) -> CliResult<u8> {
    let env = load_env(scenario, config)?;
    let (s, c) = (env.scenario(), env.config());
    let text = fs::read_to_string(trajectory)
        .map_err(|e| usage(format!("{}: {e}", trajectory.display())))?;
    let table: TrajectoryTable = input(io::read_trajectory_csv(&text), trajectory)?;
    let m = big_m.unwrap_or_else(|| miqp::default_big_m(&s.layout, c.safe_radius));
    let geo = input(
        miqp::check_geometric(&table, s, c, table.n_steps()),
        trajectory,
    )?;
    let bin = runtime(miqp::assign_binaries(&table, s, c, m))?;
    let mut all = geo;
    all.violations.extend(bin.violations);
    eprintln!(
        "steps: {}  vehicles: {}  violations: {}",
        table.n_steps(),
        table.n_vehicles(),
        all.violations.len()
    );
    if all.passed() {
        if let Some(p) = out {
            write_or_print(Some(p), &all.to_csv())?;
        }
        Ok(0)
    } else {
        write_or_print(out, &all.to_csv())?;
        Ok(3)
    }
}
