//! Command line front end: single runs, sweeps, the privacy accountant, and
//! gamma measurement on recorded trajectories.
//!
//! Exit codes: 0 success, 2 config error, 3 calibration failure, 4 numeric
//! divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pazo::config::{build_problem, parse_config, ExperimentConfig};
use pazo::metrics::gamma_similarity;
use pazo::privacy::{accountant_epsilon, calibrate_sigma, PrivacyError};
use pazo::sweep::{read_runlog_trajectory, run_sweep, SweepError};

const EXIT_CONFIG: u8 = 2;
const EXIT_CALIBRATION: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pazo",
    about = "Differentially private zeroth-order optimization with public data assistance",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single training run: the first epsilon and first seed of
    /// the config.
    Run { config: PathBuf },
    /// Execute every (epsilon, seed) cell of the config; writes one JSONL
    /// log per run plus summary.csv and timing.csv.
    Sweep { config: PathBuf },
    /// Complete a privacy spec: epsilon from sigma, or sigma from epsilon.
    Accountant(AccountantArgs),
    /// Recompute the gamma similarity report for a recorded trajectory.
    Gamma {
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
    },
}

#[derive(Args)]
struct AccountantArgs {
    /// Noise multiplier; epsilon is computed.
    #[arg(long, conflicts_with = "epsilon")]
    sigma: Option<f64>,
    /// Privacy target; sigma is calibrated.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: f64,
    /// Expected private batch size b.
    #[arg(long, short = 'b')]
    batch: usize,
    /// Private dataset size n.
    #[arg(long, short = 'n')]
    dataset_n: usize,
    /// Composition rounds T.
    #[arg(long, short = 'T')]
    rounds: usize,
    /// Queries per iteration q.
    #[arg(long, default_value_t = 1)]
    queries: usize,
    /// Clipping threshold C.
    #[arg(long, default_value_t = 1.0)]
    clip: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { config } => cmd_sweep(&config),
        Command::Accountant(args) => cmd_accountant(&args),
        Command::Gamma { config, trajectory } => cmd_gamma(&config, &trajectory),
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let mut cfg = match parse_config(path) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("config error: {err}");
            return Err(ExitCode::from(EXIT_CONFIG));
        }
    };
    if let Ok(seed) = std::env::var("PAZO_SEED") {
        match seed.parse::<u64>() {
            Ok(seed) => {
                log::info!("PAZO_SEED={seed} overrides the config seed list");
                cfg.seeds = vec![seed];
            }
            Err(err) => {
                eprintln!("config error: PAZO_SEED={seed:?} is not an integer: {err}");
                return Err(ExitCode::from(EXIT_CONFIG));
            }
        }
    }
    Ok(cfg)
}

fn sweep_exit(report: &pazo::sweep::SweepReport) -> ExitCode {
    if report.any_diverged_or_aborted() {
        ExitCode::from(EXIT_DIVERGENCE)
    } else if report.any_calibration_failure() {
        ExitCode::from(EXIT_CALIBRATION)
    } else {
        ExitCode::SUCCESS
    }
}

fn report_sweep_error(err: SweepError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        SweepError::Config(_) => ExitCode::from(EXIT_CONFIG),
        SweepError::Privacy(_) => ExitCode::from(EXIT_CALIBRATION),
        SweepError::Optim(_) => ExitCode::from(EXIT_DIVERGENCE),
        _ => ExitCode::FAILURE,
    }
}

fn cmd_run(path: &PathBuf) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    // first epsilon, first seed
    let cfg = ExperimentConfig {
        epsilons: vec![cfg.epsilons[0]],
        seeds: vec![cfg.seeds[0]],
        ..cfg
    };
    let report = match run_sweep(&cfg) {
        Ok(report) => report,
        Err(err) => return report_sweep_error(err),
    };
    let cell = &report.cells[0];
    println!(
        "algorithm={} epsilon={} seed={} status={}",
        cell.algorithm, cell.epsilon_label, cell.seed, cell.status
    );
    if let Some(record) = &cell.record {
        let last = record.checkpoints.last().expect("initial checkpoint");
        println!(
            "iterations={} final_train_loss={} final_test_loss={} final_test_accuracy={} gamma={}",
            record.iterations_run,
            last.train_loss,
            last.test_loss,
            last.test_accuracy
                .map(|a| a.to_string())
                .unwrap_or_else(|| "-".to_string()),
            last.gamma_so_far
        );
        if let Some(log) = &cell.log_path {
            println!("runlog={}", log.display());
        }
    }
    sweep_exit(&report)
}

fn cmd_sweep(path: &PathBuf) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let report = match run_sweep(&cfg) {
        Ok(report) => report,
        Err(err) => return report_sweep_error(err),
    };
    for cell in &report.cells {
        println!(
            "algorithm={} epsilon={} seed={} status={} sigma={}",
            cell.algorithm,
            cell.epsilon_label,
            cell.seed,
            cell.status,
            cell.sigma
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".to_string()),
        );
    }
    println!("summary={}", report.csv_path.display());
    println!("timing={}", report.timing_path.display());
    sweep_exit(&report)
}

fn cmd_accountant(args: &AccountantArgs) -> ExitCode {
    let (sigma, epsilon) = match (args.sigma, args.epsilon) {
        (Some(sigma), None) => {
            match accountant_epsilon(sigma, args.batch, args.dataset_n, args.rounds, args.delta) {
                Ok(eps) => (sigma, eps),
                Err(err) => {
                    eprintln!("accountant error: {err}");
                    return ExitCode::from(EXIT_CALIBRATION);
                }
            }
        }
        (None, Some(eps)) => {
            match calibrate_sigma(eps, args.delta, args.batch, args.dataset_n, args.rounds) {
                Ok(sigma) => (sigma, eps),
                Err(err @ PrivacyError::Unreachable { .. }) => {
                    eprintln!("calibration error: {err}");
                    return ExitCode::from(EXIT_CALIBRATION);
                }
                Err(err) => {
                    eprintln!("accountant error: {err}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            }
        }
        _ => {
            eprintln!("config error: give exactly one of --sigma or --epsilon");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    println!(
        "epsilon={epsilon}\ndelta={}\nsigma={sigma}\nclip_c={}\nbatch_b={}\ndataset_n={}\nrounds_t={}\nqueries_q={}",
        args.delta, args.clip, args.batch, args.dataset_n, args.rounds, args.queries
    );
    ExitCode::SUCCESS
}

fn cmd_gamma(config: &PathBuf, trajectory: &PathBuf) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let (problem, split) = match build_problem(&cfg) {
        Ok(built) => built,
        Err(err) => {
            eprintln!("config error: {err}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let log = match read_runlog_trajectory(trajectory) {
        Ok(log) => log,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::FAILURE;
        }
    };
    let report = gamma_similarity(problem.as_ref(), &log.params, &split.private, &split.public);
    for (iteration, value) in log.iterations.iter().zip(&report.per_checkpoint) {
        println!("iteration={iteration} gradient_gap={value}");
    }
    println!("gamma={}", report.gamma);
    ExitCode::SUCCESS
}
