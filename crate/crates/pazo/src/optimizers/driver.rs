//! The training loop: Poisson-sampled private batches, uniformly sampled
//! public batches, per-checkpoint metrics, and a reproducible trajectory log.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::metrics::evaluate;
use crate::privacy::PrivacySpec;
use crate::problem::{mean_gradient, Problem};
use crate::problems::SplitIndices;
use crate::rng::{poisson_sample, sample_without_replacement, RngStream};
use crate::vector::ParamVector;

use super::{
    dpsgd_step, dpzero_step, pazo_m_step, pazo_p_step, pazo_s_step, DpZeroConfig, OpCounts,
    OptState, OptimError, PazoMConfig, PazoPConfig, PazoSConfig, StepStreams,
};

/// Algorithm selector with per-variant configuration. `Sgd` and `Mezo` are
/// the non-private references (DP-SGD and DPZero with sigma = 0 and no
/// clipping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Algorithm {
    Sgd { eta: f64 },
    Mezo(DpZeroConfig),
    DpSgd { eta: f64 },
    DpZero(DpZeroConfig),
    PazoM(PazoMConfig),
    PazoP(PazoPConfig),
    PazoS(PazoSConfig),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Sgd { .. } => "sgd",
            Algorithm::Mezo(_) => "mezo",
            Algorithm::DpSgd { .. } => "dpsgd",
            Algorithm::DpZero(_) => "dpzero",
            Algorithm::PazoM(_) => "pazo-m",
            Algorithm::PazoP(cfg) => {
                if cfg.orthonormalize {
                    "pazo-p"
                } else {
                    "pazo-pprime"
                }
            }
            Algorithm::PazoS(_) => "pazo-s",
        }
    }

    pub fn is_private(&self) -> bool {
        !matches!(self, Algorithm::Sgd { .. } | Algorithm::Mezo(_))
    }

    /// Queries per iteration the privacy spec must account for.
    pub fn queries(&self) -> usize {
        match self {
            Algorithm::Mezo(cfg) | Algorithm::DpZero(cfg) => cfg.q,
            Algorithm::PazoM(cfg) => cfg.q,
            Algorithm::PazoP(cfg) => cfg.q,
            Algorithm::Sgd { .. } | Algorithm::DpSgd { .. } | Algorithm::PazoS(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub rounds: u64,
    pub eval_every: u64,
    /// Train loss above this flags the run as diverged and stops it early.
    pub divergence_threshold: f64,
    /// Record the parameter vector at each checkpoint (needed to recompute
    /// gamma from a run log).
    pub snapshot_params: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            rounds: 100,
            eval_every: 10,
            divergence_threshold: 1e12,
            snapshot_params: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
    /// Norm of the full private gradient. Oracle-only: never fed back into
    /// the optimizer.
    pub grad_norm: f64,
    /// Running max of ||grad f_public - grad f_private|| over checkpoints.
    pub gamma_so_far: f64,
    /// Candidate index last chosen by the selection method.
    pub selected_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Diverged { iteration: u64 },
    Aborted { iteration: u64, reason: String },
}

/// Per-run trajectory log. Together with the config snapshot kept by the
/// sweep layer this reproduces the run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub epsilon: f64,
    pub sigma: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub status: RunStatus,
    pub iterations_run: u64,
    /// Ledger for the first iteration; constant across iterations for every
    /// algorithm here.
    pub ops_per_iteration: OpCounts,
    pub ops_total: OpCounts,
    /// Mean wall-clock seconds per step, measured around the step function
    /// only (batch work included, evaluation excluded).
    pub mean_step_seconds: f64,
}

fn checkpoint(
    problem: &dyn Problem,
    split: &SplitIndices,
    state: &OptState,
    gamma_so_far: &mut f64,
    opts: &RunOptions,
) -> Checkpoint {
    let train = evaluate(problem, &state.x, &split.private);
    let test = if split.test.is_empty() {
        train
    } else {
        evaluate(problem, &state.x, &split.test)
    };
    let g_private = mean_gradient(problem, &state.x, &split.private);
    let g_public = mean_gradient(problem, &state.x, &split.public);
    let gap = g_public.sub(&g_private).norm();
    *gamma_so_far = gamma_so_far.max(gap);
    Checkpoint {
        iteration: state.t,
        train_loss: train.mean_loss,
        test_loss: test.mean_loss,
        test_accuracy: test.accuracy,
        grad_norm: g_private.norm(),
        gamma_so_far: *gamma_so_far,
        selected_index: state.last_selected,
        params: opts.snapshot_params.then(|| state.x.as_slice().to_vec()),
    }
}

/// Execute `opts.rounds` steps of the chosen algorithm. Divergence and
/// non-finite updates stop the run early; the record carries the trajectory
/// up to that point and a flagged status.
pub fn run_training(
    problem: &dyn Problem,
    split: &SplitIndices,
    algorithm: &Algorithm,
    spec: &PrivacySpec,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunRecord, OptimError> {
    if spec.dataset_n != split.private.len() {
        return Err(OptimError::ConfigMismatch(format!(
            "privacy spec covers n={} samples but the private split has {}",
            spec.dataset_n,
            split.private.len()
        )));
    }
    if algorithm.queries() != spec.queries_q {
        return Err(OptimError::ConfigMismatch(format!(
            "algorithm runs q={} queries but the privacy spec accounts for {}",
            algorithm.queries(),
            spec.queries_q
        )));
    }
    if opts.eval_every == 0 {
        return Err(OptimError::ConfigMismatch("eval_every must be >= 1".into()));
    }
    let needs_public = matches!(
        algorithm,
        Algorithm::PazoM(_) | Algorithm::PazoP(_) | Algorithm::PazoS(_)
    );
    let public_need = match algorithm {
        Algorithm::PazoM(cfg) => cfg.public_batch,
        Algorithm::PazoP(cfg) => cfg.public_batch,
        Algorithm::PazoS(cfg) => cfg.k * cfg.public_batch,
        _ => 0,
    };
    if needs_public && (public_need == 0 || public_need > split.public.len()) {
        return Err(OptimError::ConfigMismatch(format!(
            "need {} public samples per iteration but the public split has {}",
            public_need,
            split.public.len()
        )));
    }

    let root = RngStream::new(seed, "run");
    let mut batch_rng = root.child("private-batch");
    let mut public_rng = root.child("public-batch");
    let mut state = OptState::new(ParamVector::zeros(problem.dim()), StepStreams::from_root(&root));

    let rate = spec.sampling_rate();
    let mut gamma_so_far = 0.0f64;
    let mut checkpoints = vec![checkpoint(problem, split, &state, &mut gamma_so_far, opts)];
    let mut status = RunStatus::Completed;
    let mut step_seconds = 0.0f64;
    let mut ops_first = OpCounts::default();

    for t in 0..opts.rounds {
        let private_batch = poisson_sample(&split.private, rate, &mut batch_rng);
        let clock = Instant::now();
        let result = match algorithm {
            Algorithm::Sgd { eta } | Algorithm::DpSgd { eta } => {
                dpsgd_step(&mut state, problem, &private_batch, spec, *eta)
            }
            Algorithm::Mezo(cfg) | Algorithm::DpZero(cfg) => {
                dpzero_step(&mut state, problem, &private_batch, spec, cfg)
            }
            Algorithm::PazoM(cfg) => {
                let public =
                    sample_without_replacement(&split.public, cfg.public_batch, &mut public_rng);
                pazo_m_step(&mut state, problem, &private_batch, &public, spec, cfg)
            }
            Algorithm::PazoP(cfg) => {
                let batches: Vec<Vec<usize>> = (0..cfg.k)
                    .map(|_| {
                        sample_without_replacement(
                            &split.public,
                            cfg.public_batch,
                            &mut public_rng,
                        )
                    })
                    .collect();
                pazo_p_step(&mut state, problem, &private_batch, &batches, spec, cfg)
            }
            Algorithm::PazoS(cfg) => {
                // one draw of k * b', divided into k non-overlapping partitions
                let pool = sample_without_replacement(
                    &split.public,
                    cfg.k * cfg.public_batch,
                    &mut public_rng,
                );
                let batches: Vec<Vec<usize>> = pool
                    .chunks(cfg.public_batch)
                    .map(|c| c.to_vec())
                    .collect();
                pazo_s_step(&mut state, problem, &private_batch, &batches, spec, cfg).map(|_| ())
            }
        };
        step_seconds += clock.elapsed().as_secs_f64();
        if t == 0 {
            ops_first = state.ops;
        }
        if let Err(err) = result {
            log::warn!("run aborted at iteration {t}: {err}");
            status = RunStatus::Aborted {
                iteration: t,
                reason: err.to_string(),
            };
            break;
        }
        if state.t % opts.eval_every == 0 || state.t == opts.rounds {
            let cp = checkpoint(problem, split, &state, &mut gamma_so_far, opts);
            let diverged = cp.train_loss > opts.divergence_threshold;
            checkpoints.push(cp);
            if diverged {
                status = RunStatus::Diverged { iteration: state.t };
                break;
            }
        }
    }

    let iterations_run = state.t;
    Ok(RunRecord {
        algorithm: algorithm.name().to_string(),
        seed,
        epsilon: spec.epsilon,
        sigma: spec.sigma,
        checkpoints,
        status,
        iterations_run,
        ops_per_iteration: ops_first,
        ops_total: state.ops,
        mean_step_seconds: if iterations_run > 0 {
            step_seconds / iterations_run as f64
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_logistic_split, make_quadratic, ShiftKind, SplitSpec};
    use crate::sampling::DirectionKind;

    fn quadratic_split(n_private: usize, n_extra: usize) -> SplitIndices {
        SplitIndices {
            private: (0..n_private).collect(),
            public: (n_private..n_private + n_extra).collect(),
            test: (n_private + n_extra..n_private + 2 * n_extra).collect(),
        }
    }

    #[test]
    fn zero_rounds_records_only_the_initial_evaluation() {
        let problem = make_quadratic(4, 1.0, 2.0, 40, 0.3, 1).unwrap();
        let split = quadratic_split(20, 10);
        let spec = PrivacySpec::non_private(20, 20, 1, 1);
        let algo = Algorithm::Sgd { eta: 0.1 };
        let opts = RunOptions {
            rounds: 0,
            ..Default::default()
        };
        let record = run_training(&problem, &split, &algo, &spec, 7, &opts).unwrap();
        assert_eq!(record.checkpoints.len(), 1);
        assert_eq!(record.checkpoints[0].iteration, 0);
        assert_eq!(record.status, RunStatus::Completed);
    }

    #[test]
    fn identical_seeds_replay_bit_identical_records() {
        let split = SplitSpec {
            n_private: 60,
            n_public: 20,
            n_test: 20,
            shift: ShiftKind::MeanShift { magnitude: 0.3 },
            seed: 5,
        };
        let (problem, idx) = make_logistic_split(6, 1e-3, 1.0, &split).unwrap();
        let spec = PrivacySpec::with_sigma(1.2, 1e-3, 1.0, 16, 60, 30, 1).unwrap();
        let algo = Algorithm::PazoM(PazoMConfig {
            eta: 0.2,
            alpha: 0.5,
            q: 1,
            lambda: 1e-2,
            public_batch: 8,
            direction: DirectionKind::Sphere,
        });
        let opts = RunOptions {
            rounds: 30,
            eval_every: 10,
            ..Default::default()
        };
        let a = run_training(&problem, &idx, &algo, &spec, 11, &opts).unwrap();
        let b = run_training(&problem, &idx, &algo, &spec, 11, &opts).unwrap();
        assert_eq!(a.checkpoints, b.checkpoints);
        let c = run_training(&problem, &idx, &algo, &spec, 12, &opts).unwrap();
        assert_ne!(a.checkpoints, c.checkpoints);
    }

    #[test]
    fn plain_sgd_contracts_on_the_quadratic() {
        // spread 0 makes every stochastic gradient the full gradient, so SGD
        // with eta < 2/L contracts to the optimum
        let problem = make_quadratic(6, 0.5, 2.0, 30, 0.0, 3).unwrap();
        let split = SplitIndices {
            private: (0..30).collect(),
            public: (0..30).collect(),
            test: vec![],
        };
        let spec = PrivacySpec::non_private(30, 30, 200, 1);
        let algo = Algorithm::Sgd { eta: 0.9 }; // eta < 2/L = 1
        let opts = RunOptions {
            rounds: 200,
            eval_every: 200,
            ..Default::default()
        };
        let record = run_training(&problem, &split, &algo, &spec, 17, &opts).unwrap();
        let last = record.checkpoints.last().unwrap();
        assert!(last.grad_norm <= 1e-6, "grad norm {}", last.grad_norm);
    }

    #[test]
    fn divergent_run_is_flagged_and_stopped() {
        let problem = make_quadratic(4, 2.0, 2.0, 10, 0.0, 4).unwrap();
        let split = SplitIndices {
            private: (0..10).collect(),
            public: (0..10).collect(),
            test: vec![],
        };
        let spec = PrivacySpec::non_private(10, 10, 400, 1);
        // eta far above 2/L oscillates with exploding amplitude
        let algo = Algorithm::Sgd { eta: 5.0 };
        let opts = RunOptions {
            rounds: 400,
            eval_every: 5,
            ..Default::default()
        };
        let record = run_training(&problem, &split, &algo, &spec, 19, &opts).unwrap();
        assert!(matches!(record.status, RunStatus::Diverged { .. }));
        assert!(record.iterations_run < 400);
    }

    #[test]
    fn op_ledger_matches_the_per_iteration_formulas() {
        let split = SplitSpec {
            n_private: 32,
            n_public: 32,
            n_test: 8,
            shift: ShiftKind::None,
            seed: 23,
        };
        let (problem, idx) = make_logistic_split(5, 0.0, 1.0, &split).unwrap();
        // rate 1 so the realized private batch is always the full set
        let b = 32;
        let q = 3;
        let k = 2;
        let opts = RunOptions {
            rounds: 4,
            eval_every: 4,
            ..Default::default()
        };
        let check = |algo: Algorithm, spec: PrivacySpec, want: OpCounts| {
            let record = run_training(&problem, &idx, &algo, &spec, 29, &opts).unwrap();
            assert_eq!(record.ops_per_iteration, want, "{}", record.algorithm);
            assert_eq!(
                record.ops_total,
                OpCounts {
                    private_forward: want.private_forward * 4,
                    public_forward_backward: want.public_forward_backward * 4,
                    private_backward: want.private_backward * 4,
                },
                "{} cumulative",
                record.algorithm
            );
        };
        let spec_q = PrivacySpec {
            queries_q: q,
            ..PrivacySpec::non_private(b, b, 4, q)
        };
        check(
            Algorithm::DpZero(DpZeroConfig {
                eta: 0.01,
                q,
                lambda: 1e-2,
                radius: None,
                direction: DirectionKind::Sphere,
            }),
            spec_q.clone(),
            OpCounts {
                private_forward: 2 * q as u64,
                public_forward_backward: 0,
                private_backward: 0,
            },
        );
        check(
            Algorithm::PazoM(PazoMConfig {
                eta: 0.01,
                alpha: 0.5,
                q,
                lambda: 1e-2,
                public_batch: 8,
                direction: DirectionKind::Sphere,
            }),
            spec_q.clone(),
            OpCounts {
                private_forward: 2 * q as u64,
                public_forward_backward: 1,
                private_backward: 0,
            },
        );
        check(
            Algorithm::PazoP(PazoPConfig {
                eta: 0.01,
                k,
                q,
                lambda: 1e-2,
                public_batch: 8,
                orthonormalize: true,
                direction: DirectionKind::Sphere,
            }),
            spec_q,
            OpCounts {
                private_forward: 2 * q as u64,
                public_forward_backward: k as u64,
                private_backward: 0,
            },
        );
        let spec_1 = PrivacySpec::non_private(b, b, 4, 1);
        check(
            Algorithm::PazoS(PazoSConfig {
                eta: 0.01,
                k,
                public_batch: 8,
                perturb_scale: 0.01,
            }),
            spec_1.clone(),
            OpCounts {
                private_forward: k as u64 + 1,
                public_forward_backward: k as u64,
                private_backward: 0,
            },
        );
        check(
            Algorithm::DpSgd { eta: 0.01 },
            spec_1,
            OpCounts {
                private_forward: b as u64,
                public_forward_backward: 0,
                private_backward: b as u64,
            },
        );
    }

    #[test]
    fn gamma_so_far_is_nondecreasing_along_checkpoints() {
        let split = SplitSpec {
            n_private: 50,
            n_public: 10,
            n_test: 10,
            shift: ShiftKind::MeanShift { magnitude: 0.5 },
            seed: 31,
        };
        let (problem, idx) = make_logistic_split(4, 0.0, 1.0, &split).unwrap();
        let spec = PrivacySpec::non_private(10, 50, 40, 1);
        let algo = Algorithm::Mezo(DpZeroConfig {
            eta: 0.05,
            q: 1,
            lambda: 1e-2,
            radius: None,
            direction: DirectionKind::Sphere,
        });
        let opts = RunOptions {
            rounds: 40,
            eval_every: 10,
            ..Default::default()
        };
        let record = run_training(&problem, &idx, &algo, &spec, 37, &opts).unwrap();
        for w in record.checkpoints.windows(2) {
            assert!(w[1].gamma_so_far >= w[0].gamma_so_far);
        }
        assert!(record.checkpoints.last().unwrap().gamma_so_far > 0.0);
    }
}
