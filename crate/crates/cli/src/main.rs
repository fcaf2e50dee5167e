//! `gridflow` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or parse error,
//! 3 trajectory check failed.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "gridflow",
    version,
    about = "Grid intersection control: training, rollouts, MIQP export"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SenseArg {
    Minimize,
    Maximize,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy; writes metrics.csv, checkpoints and manifest.json.
    Train {
        #[arg(long, required_unless_present = "manifest")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        train_config: Option<PathBuf>,
        /// Replay the inputs recorded in a manifest.json.
        #[arg(long, conflicts_with_all = ["scenario", "config", "train_config"])]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Run one episode with a trained policy and write the trajectory CSV.
    Rollout {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = gridflow::eval::DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Apply the mean action instead of sampling.
        #[arg(long)]
        deterministic: bool,
        /// Trajectory CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a policy over several episodes.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long, default_value_t = gridflow::eval::DEFAULT_HORIZON)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        deterministic: bool,
    },
    /// Write the MIQP baseline model in LP format.
    ExportMiqp {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of time steps T (>= 2).
        #[arg(long)]
        horizon: usize,
        /// Big-M constant; defaults to ten times the lower bound.
        #[arg(long)]
        big_m: Option<f64>,
        #[arg(long, value_enum, default_value_t = SenseArg::Minimize)]
        objective_sense: SenseArg,
        /// LP path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a trajectory CSV against the geometric and big-M constraints.
    Check {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        big_m: Option<f64>,
        /// Violations CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train {
            scenario,
            config,
            train_config,
            manifest,
            out,
            seed,
            iterations,
        } => commands::train(commands::TrainArgs {
            scenario,
            config,
            train_config,
            manifest,
            out,
            seed,
            iterations,
        }),
        Command::Rollout {
            policy,
            scenario,
            config,
            horizon,
            seed,
            deterministic,
            out,
        } => commands::rollout(
            &policy,
            &scenario,
            config.as_deref(),
            horizon,
            seed,
            deterministic,
            out.as_deref(),
        ),
        Command::Eval {
            policy,
            scenario,
            config,
            episodes,
            horizon,
            seed,
            deterministic,
        } => commands::eval(
            &policy,
            &scenario,
            config.as_deref(),
            episodes,
            horizon,
            seed,
            deterministic,
        ),
        Command::ExportMiqp {
            scenario,
            config,
            horizon,
            big_m,
            objective_sense,
            out,
        } => commands::export_miqp(
            &scenario,
            config.as_deref(),
            horizon,
            big_m,
            objective_sense,
            out.as_deref(),
        ),
        Command::Check {
            trajectory,
            scenario,
            config,
            big_m,
            out,
        } => commands::check(
            &trajectory,
            &scenario,
            config.as_deref(),
            big_m,
            out.as_deref(),
        ),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
