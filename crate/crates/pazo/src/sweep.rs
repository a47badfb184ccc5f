//! Experiment sweeps over (epsilon, seed) cells with persistent run logs:
//! one append-only JSONL file per run plus one summary CSV and one timing
//! CSV per sweep, all deterministic given the config.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{build_algorithm, build_problem, serialize_config, AlgorithmName, ExperimentConfig};
use crate::optimizers::{run_training, Algorithm, OptimError, RunOptions, RunRecord, RunStatus};
use crate::privacy::{accountant_epsilon, calibrate_sigma, PrivacyError, PrivacySpec};
use crate::vector::ParamVector;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config error: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("privacy error: {0}")]
    Privacy(#[from] PrivacyError),
    #[error("optimizer error: {0}")]
    Optim(#[from] OptimError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run log {path} line {line}: {reason}")]
    RunLog {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Outcome of one (epsilon, seed) cell.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub algorithm: String,
    pub epsilon_label: String,
    pub seed: u64,
    /// ok | diverged | aborted | fail (fail = sigma calibration failed)
    pub status: String,
    pub sigma: Option<f64>,
    pub record: Option<RunRecord>,
    pub log_path: Option<PathBuf>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub csv_path: PathBuf,
    pub timing_path: PathBuf,
}

impl SweepReport {
    pub fn any_diverged_or_aborted(&self) -> bool {
        self.cells
            .iter()
            .any(|c| c.status == "diverged" || c.status == "aborted")
    }

    pub fn any_calibration_failure(&self) -> bool {
        self.cells.iter().any(|c| c.status == "fail")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Meta {
        algorithm: String,
        seed: u64,
        epsilon: String,
        sigma: f64,
        config: String,
    },
    Checkpoint(crate::optimizers::Checkpoint),
    Summary {
        status: RunStatus,
        iterations_run: u64,
        mean_step_seconds: f64,
        ops_per_iteration: crate::optimizers::OpCounts,
    },
}

fn epsilon_label(epsilon: f64) -> String {
    if epsilon.is_infinite() {
        "inf".to_string()
    } else {
        format!("{epsilon}")
    }
}

fn format_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".to_string(),
    }
}

fn write_runlog(
    path: &Path,
    config_text: &str,
    record: &RunRecord,
    epsilon_label: &str,
) -> Result<(), SweepError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut emit = |line: &LogLine| -> Result<(), SweepError> {
        let json = serde_json::to_string(line).expect("log line serializes");
        writeln!(w, "{json}").map_err(io_err(path))
    };
    emit(&LogLine::Meta {
        algorithm: record.algorithm.clone(),
        seed: record.seed,
        epsilon: epsilon_label.to_string(),
        sigma: record.sigma,
        config: config_text.to_string(),
    })?;
    for cp in &record.checkpoints {
        emit(&LogLine::Checkpoint(cp.clone()))?;
    }
    emit(&LogLine::Summary {
        status: record.status.clone(),
        iterations_run: record.iterations_run,
        mean_step_seconds: record.mean_step_seconds,
        ops_per_iteration: record.ops_per_iteration,
    })?;
    w.flush().map_err(io_err(path))
}

/// Parameter snapshots and the data seed stored in a run log, for
/// recomputing gamma on the recorded trajectory.
pub struct RunLogTrajectory {
    pub seed: u64,
    pub params: Vec<ParamVector>,
    pub iterations: Vec<u64>,
}

pub fn read_runlog_trajectory(path: &Path) -> Result<RunLogTrajectory, SweepError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut seed = 0;
    let mut params = Vec::new();
    let mut iterations = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| SweepError::RunLog {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        match parsed {
            LogLine::Meta { seed: s, .. } => seed = s,
            LogLine::Checkpoint(cp) => {
                let Some(x) = cp.params else {
                    return Err(SweepError::RunLog {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason: "checkpoint has no parameter snapshot".to_string(),
                    });
                };
                params.push(ParamVector::new(x));
                iterations.push(cp.iteration);
            }
            LogLine::Summary { .. } => {}
        }
    }
    if params.is_empty() {
        return Err(SweepError::RunLog {
            path: path.to_path_buf(),
            line: 0,
            reason: "no checkpoints with parameters".to_string(),
        });
    }
    Ok(RunLogTrajectory {
        seed,
        params,
        iterations,
    })
}

/// The privacy spec for one sweep cell, or `None` when sigma calibration
/// cannot reach the target (the cell is then marked "fail").
fn cell_spec(
    cfg: &ExperimentConfig,
    algorithm: &Algorithm,
    epsilon: f64,
) -> Result<Option<PrivacySpec>, SweepError> {
    if !algorithm.is_private() {
        return Ok(Some(PrivacySpec::non_private(
            cfg.batch,
            cfg.n_private,
            cfg.rounds.max(1) as usize,
            algorithm.queries(),
        )));
    }
    let rounds = cfg.rounds.max(1) as usize;
    match calibrate_sigma(epsilon, cfg.delta, cfg.batch, cfg.n_private, rounds) {
        Ok(sigma) => Ok(Some(PrivacySpec {
            epsilon,
            delta: cfg.delta,
            clip_c: cfg.clip_c,
            sigma,
            batch_b: cfg.batch,
            dataset_n: cfg.n_private,
            rounds_t: rounds,
            queries_q: algorithm.queries(),
        })),
        Err(PrivacyError::Unreachable { .. }) => Ok(None),
        Err(other) => Err(other.into()),
    }
}

/// Epsilon cells for a config: the configured epsilon list, a single
/// accountant-derived cell when sigma is pinned, or one non-private cell for
/// the non-private references.
fn epsilon_cells(cfg: &ExperimentConfig, algorithm: &Algorithm) -> Result<Vec<f64>, SweepError> {
    if !algorithm.is_private() {
        return Ok(vec![f64::INFINITY]);
    }
    if let Some(sigma) = cfg.sigma {
        let eps = accountant_epsilon(
            sigma,
            cfg.batch,
            cfg.n_private,
            cfg.rounds.max(1) as usize,
            cfg.delta,
        )?;
        return Ok(vec![eps]);
    }
    Ok(cfg.epsilons.clone())
}

/// Run every (epsilon, seed) cell of the config, writing one JSONL log per
/// run, a summary CSV, and a timing CSV. Cells whose sigma calibration fails
/// are recorded as "fail" and skipped; diverged or aborted runs keep their
/// partial trajectory and status.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport, SweepError> {
    let config_text = serialize_config(cfg);
    std::fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    let (problem, split) = build_problem(cfg)?;
    let algorithm = build_algorithm(cfg);
    let opts = RunOptions {
        rounds: cfg.rounds,
        eval_every: cfg.eval_every,
        ..Default::default()
    };

    let mut cells = Vec::new();
    for &epsilon in &epsilon_cells(cfg, &algorithm)? {
        let label = epsilon_label(epsilon);
        let spec = cell_spec(cfg, &algorithm, epsilon)?;
        for &seed in &cfg.seeds {
            match &spec {
                None => cells.push(SweepCell {
                    algorithm: algorithm.name().to_string(),
                    epsilon_label: label.clone(),
                    seed,
                    status: "fail".to_string(),
                    sigma: None,
                    record: None,
                    log_path: None,
                }),
                Some(spec) => {
                    let record =
                        run_training(problem.as_ref(), &split, &algorithm, spec, seed, &opts)?;
                    let status = match &record.status {
                        RunStatus::Completed => "ok",
                        RunStatus::Diverged { .. } => "diverged",
                        RunStatus::Aborted { .. } => "aborted",
                    };
                    let log_path = cfg.output_dir.join(format!(
                        "{}_eps{}_seed{}.jsonl",
                        record.algorithm, label, seed
                    ));
                    write_runlog(&log_path, &config_text, &record, &label)?;
                    cells.push(SweepCell {
                        algorithm: record.algorithm.clone(),
                        epsilon_label: label.clone(),
                        seed,
                        status: status.to_string(),
                        sigma: Some(spec.sigma),
                        record: Some(record),
                        log_path: Some(log_path),
                    });
                }
            }
        }
    }

    cells.sort_by(|a, b| {
        (&a.algorithm, &a.epsilon_label, a.seed).cmp(&(&b.algorithm, &b.epsilon_label, b.seed))
    });

    let csv_path = cfg.output_dir.join("summary.csv");
    write_summary_csv(&csv_path, &cells)?;
    let timing_path = cfg.output_dir.join("timing.csv");
    let records: Vec<&RunRecord> = cells.iter().filter_map(|c| c.record.as_ref()).collect();
    write_timing_csv(&timing_path, &timing_report(&records))?;

    Ok(SweepReport {
        cells,
        csv_path,
        timing_path,
    })
}

fn write_summary_csv(path: &Path, cells: &[SweepCell]) -> Result<(), SweepError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "algorithm,epsilon,seed,status,sigma,final_train_loss,final_test_loss,final_test_accuracy,gamma,iterations"
    )
    .map_err(io_err(path))?;
    for cell in cells {
        let (train, test, acc, gamma, iters) = match &cell.record {
            Some(record) => {
                let last = record.checkpoints.last().expect("at least the initial");
                (
                    format_opt(Some(last.train_loss)),
                    format_opt(Some(last.test_loss)),
                    format_opt(last.test_accuracy),
                    format_opt(Some(last.gamma_so_far)),
                    record.iterations_run.to_string(),
                )
            }
            None => (
                "-".to_string(),
                "-".to_string(),
                "-".to_string(),
                "-".to_string(),
                "-".to_string(),
            ),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            cell.algorithm,
            cell.epsilon_label,
            cell.seed,
            cell.status,
            format_opt(cell.sigma),
            train,
            test,
            acc,
            gamma,
            iters
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub algorithm: String,
    pub mean_seconds_per_iteration: f64,
    pub iterations: u64,
}

/// Per-algorithm mean seconds per iteration, weighted by iterations run.
/// Rows come out sorted by algorithm name; fewer than 20 measured iterations
/// logs a warning but still reports.
pub fn timing_report(records: &[&RunRecord]) -> Vec<TimingRow> {
    let mut by_algo: std::collections::BTreeMap<String, (f64, u64)> =
        std::collections::BTreeMap::new();
    for record in records {
        let entry = by_algo.entry(record.algorithm.clone()).or_insert((0.0, 0));
        entry.0 += record.mean_step_seconds * record.iterations_run as f64;
        entry.1 += record.iterations_run;
    }
    by_algo
        .into_iter()
        .map(|(algorithm, (total_seconds, iterations))| {
            if iterations < 20 {
                log::warn!(
                    "timing for {algorithm} averages only {iterations} iterations (< 20)"
                );
            }
            TimingRow {
                algorithm,
                mean_seconds_per_iteration: if iterations > 0 {
                    total_seconds / iterations as f64
                } else {
                    0.0
                },
                iterations,
            }
        })
        .collect()
}

fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> Result<(), SweepError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "algorithm,mean_seconds_per_iteration,iterations").map_err(io_err(path))?;
    for row in rows {
        writeln!(
            w,
            "{},{:.6},{}",
            row.algorithm, row.mean_seconds_per_iteration, row.iterations
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// The summary CSV with the nondeterministic timing stripped is the
/// determinism contract: reruns of the same config produce identical bytes.
pub fn read_to_string(path: &Path) -> Result<String, SweepError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    fn small_config(dir: &Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            "problem.kind = logistic\nproblem.dim = 6\nsplit.n_private = 80\n\
             split.n_public = 20\nsplit.n_test = 20\nrun.batch = 16\nrun.t = 20\n\
             run.eval_every = 5\noutput.dir = {}\n{extra}",
            dir.display()
        );
        parse_config_str(&text).unwrap()
    }

    #[test]
    fn one_epsilon_one_seed_yields_one_row_and_a_log() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = dpzero\nprivacy.epsilons = 1\nrun.seeds = 3\n",
        );
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 1);
        let csv = read_to_string(&report.csv_path).unwrap();
        assert_eq!(csv.lines().count(), 2, "{csv}");
        let log = &report.cells[0].log_path.as_ref().unwrap();
        let lines = std::fs::read_to_string(log).unwrap();
        assert!(lines.lines().count() >= 2);
    }

    #[test]
    fn two_seeds_share_sigma_but_differ_in_outcome() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = dpzero\nalgorithm.eta = 0.05\nprivacy.epsilons = 2\nrun.seeds = 1,2\n",
        );
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 2);
        assert_eq!(report.cells[0].sigma, report.cells[1].sigma);
        let a = report.cells[0].record.as_ref().unwrap();
        let b = report.cells[1].record.as_ref().unwrap();
        assert_ne!(
            a.checkpoints.last().unwrap().test_loss,
            b.checkpoints.last().unwrap().test_loss
        );
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = pazo-m\nalgorithm.public_batch = 8\nprivacy.epsilons = 0.5,1\nrun.seeds = 0,1\n",
        );
        let first = run_sweep(&cfg).unwrap();
        let csv1 = read_to_string(&first.csv_path).unwrap();
        let second = run_sweep(&cfg).unwrap();
        let csv2 = read_to_string(&second.csv_path).unwrap();
        assert_eq!(csv1, csv2);
    }

    #[test]
    fn non_private_reference_ignores_epsilons() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = sgd\nprivacy.epsilons = 0.5,1,2\nrun.seeds = 0\n",
        );
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].epsilon_label, "inf");
    }

    #[test]
    fn unreachable_epsilon_marks_the_cell_failed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = dpzero\nprivacy.epsilons = 0.0000000001\nrun.seeds = 0\n",
        );
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.cells[0].status, "fail");
        assert!(report.any_calibration_failure());
        let csv = read_to_string(&report.csv_path).unwrap();
        assert!(csv.contains(",fail,"), "{csv}");
    }

    #[test]
    fn every_csv_sigma_satisfies_the_accountant_bound() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = dpzero\nprivacy.epsilons = 0.5,1,3\nrun.seeds = 0\n",
        );
        let report = run_sweep(&cfg).unwrap();
        for cell in &report.cells {
            let eps_target: f64 = cell.epsilon_label.parse().unwrap();
            let sigma = cell.sigma.unwrap();
            let eps = accountant_epsilon(sigma, cfg.batch, cfg.n_private, cfg.rounds as usize, cfg.delta)
                .unwrap();
            assert!(eps <= eps_target, "{eps} > {eps_target}");
        }
    }

    fn timing_record(name: &str, secs: f64, iters: u64) -> RunRecord {
        RunRecord {
            algorithm: name.to_string(),
            seed: 0,
            epsilon: 1.0,
            sigma: 1.0,
            checkpoints: vec![],
            status: RunStatus::Completed,
            iterations_run: iters,
            ops_per_iteration: Default::default(),
            ops_total: Default::default(),
            mean_step_seconds: secs,
        }
    }

    #[test]
    fn timing_rows_are_sorted_and_weighted() {
        let uniform = timing_record("sgd", 0.5, 20);
        let short = timing_record("pazo-m", 0.2, 10);
        let long = timing_record("pazo-m", 0.4, 30);
        let rows = timing_report(&[&long, &uniform, &short]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].algorithm, "pazo-m");
        assert_eq!(rows[1].algorithm, "sgd");
        assert_eq!(rows[1].mean_seconds_per_iteration, 0.5);
        // (0.2 * 10 + 0.4 * 30) / 40 = 0.35
        assert!((rows[0].mean_seconds_per_iteration - 0.35).abs() <= 1e-12);
        assert_eq!(rows[0].iterations, 40);
    }

    #[test]
    fn runlog_round_trips_the_trajectory() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(
            dir.path(),
            "algorithm.name = mezo\nrun.seeds = 5\n",
        );
        let report = run_sweep(&cfg).unwrap();
        let log = report.cells[0].log_path.as_ref().unwrap();
        let trajectory = read_runlog_trajectory(log).unwrap();
        assert_eq!(trajectory.seed, 5);
        let record = report.cells[0].record.as_ref().unwrap();
        assert_eq!(trajectory.params.len(), record.checkpoints.len());
        let want = ParamVector::new(record.checkpoints[1].params.clone().unwrap());
        assert_eq!(trajectory.params[1], want);
    }
}
