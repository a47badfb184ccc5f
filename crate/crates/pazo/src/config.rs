//! Experiment configuration: flat key=value text with dotted section
//! prefixes, validated and filled with documented defaults.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::optimizers::{
    Algorithm, DpZeroConfig, PazoMConfig, PazoPConfig, PazoSConfig,
};
use crate::problem::Problem;
use crate::problems::{
    load_csv_dataset, make_logistic_split, make_quadratic, DataError, ShiftKind, SplitIndices,
    SplitSpec,
};
use crate::sampling::DirectionKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("unknown keys: {}", keys.join(", "))]
    UnknownKeys { keys: Vec<String> },
    #[error("duplicate key {key}")]
    DuplicateKey { key: String },
    #[error("{key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("dataset error: {0}")]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Quadratic,
    Logistic,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmName {
    Sgd,
    Mezo,
    DpSgd,
    DpZero,
    PazoM,
    PazoP,
    PazoPPrime,
    PazoS,
}

impl AlgorithmName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmName::Sgd => "sgd",
            AlgorithmName::Mezo => "mezo",
            AlgorithmName::DpSgd => "dpsgd",
            AlgorithmName::DpZero => "dpzero",
            AlgorithmName::PazoM => "pazo-m",
            AlgorithmName::PazoP => "pazo-p",
            AlgorithmName::PazoPPrime => "pazo-pprime",
            AlgorithmName::PazoS => "pazo-s",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sgd" => AlgorithmName::Sgd,
            "mezo" => AlgorithmName::Mezo,
            "dpsgd" => AlgorithmName::DpSgd,
            "dpzero" => AlgorithmName::DpZero,
            "pazo-m" => AlgorithmName::PazoM,
            "pazo-p" => AlgorithmName::PazoP,
            "pazo-pprime" => AlgorithmName::PazoPPrime,
            "pazo-s" => AlgorithmName::PazoS,
            _ => return None,
        })
    }
}

/// A fully resolved experiment: problem and split generation, one algorithm
/// with its knobs, the privacy targets, the run schedule, and where output
/// goes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem_kind: ProblemKind,
    pub dim: usize,
    pub data_seed: u64,
    // quadratic knobs
    pub quad_mu: f64,
    pub quad_l: f64,
    pub quad_spread: f64,
    // logistic knobs
    pub reg: f64,
    pub condition: f64,
    // csv knobs
    pub csv_path: Option<PathBuf>,
    pub csv_has_header: bool,

    pub n_private: usize,
    pub n_public: usize,
    pub n_test: usize,
    pub shift: ShiftKind,

    pub algorithm: AlgorithmName,
    pub eta: f64,
    pub alpha: f64,
    pub q: usize,
    pub lambda: f64,
    pub k: usize,
    pub public_batch: usize,
    pub perturb_scale: f64,
    pub direction: DirectionKind,

    pub epsilons: Vec<f64>,
    pub sigma: Option<f64>,
    pub delta: f64,
    pub clip_c: f64,

    pub rounds: u64,
    pub eval_every: u64,
    pub batch: usize,
    pub seeds: Vec<u64>,

    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem_kind: ProblemKind::Logistic,
            dim: 100,
            data_seed: 0,
            quad_mu: 0.5,
            quad_l: 2.0,
            quad_spread: 0.5,
            reg: 1e-3,
            condition: 1.0,
            csv_path: None,
            csv_has_header: false,
            n_private: 2000,
            n_public: 80,
            n_test: 500,
            shift: ShiftKind::None,
            algorithm: AlgorithmName::DpZero,
            eta: 0.1,
            alpha: 0.5,
            q: 1,
            lambda: 1e-2,
            k: 3,
            public_batch: 16,
            perturb_scale: 0.01,
            direction: DirectionKind::Sphere,
            epsilons: vec![1.0],
            sigma: None,
            delta: f64::NAN, // resolved to 1/n_private when unset
            clip_c: 1.0,
            rounds: 100,
            eval_every: 10,
            batch: 64,
            seeds: vec![0],
            output_dir: PathBuf::from("runs"),
        }
    }
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|e| bad(key, format!("bad number {v:?}: {e}")))?;
    if !x.is_finite() {
        return Err(bad(key, format!("must be finite, got {v}")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse()
        .map_err(|e| bad(key, format!("bad integer {v:?}: {e}")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64, ConfigError> {
    v.parse()
        .map_err(|e| bad(key, format!("bad integer {v:?}: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got {v:?}"))),
    }
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, format!("must be > 0, got {x}")))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut delta_set = false;
    let mut shift_kind: Option<String> = None;
    let mut shift_magnitude = 0.0f64;
    let mut imbalance_ratio = 1.0f64;
    let mut unknown = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: line_no + 1,
                text: raw.to_string(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
            });
        }
        match key {
            "problem.kind" => {
                cfg.problem_kind = match value {
                    "quadratic" => ProblemKind::Quadratic,
                    "logistic" => ProblemKind::Logistic,
                    "csv" => ProblemKind::Csv,
                    _ => {
                        return Err(bad(
                            key,
                            format!("expected quadratic, logistic, or csv, got {value:?}"),
                        ))
                    }
                }
            }
            "problem.dim" => cfg.dim = parse_usize(key, value)?,
            "problem.seed" => cfg.data_seed = parse_u64(key, value)?,
            "problem.mu" => cfg.quad_mu = positive(key, parse_f64(key, value)?)?,
            "problem.l" => cfg.quad_l = positive(key, parse_f64(key, value)?)?,
            "problem.spread" => {
                cfg.quad_spread = parse_f64(key, value)?;
                if cfg.quad_spread < 0.0 {
                    return Err(bad(key, "must be >= 0"));
                }
            }
            "problem.reg" => {
                cfg.reg = parse_f64(key, value)?;
                if cfg.reg < 0.0 {
                    return Err(bad(key, "must be >= 0"));
                }
            }
            "problem.condition" => {
                cfg.condition = parse_f64(key, value)?;
                if cfg.condition < 1.0 {
                    return Err(bad(key, format!("must be >= 1, got {}", cfg.condition)));
                }
            }
            "problem.csv_path" => cfg.csv_path = Some(PathBuf::from(value)),
            "problem.csv_has_header" => cfg.csv_has_header = parse_bool(key, value)?,
            "split.n_private" => cfg.n_private = parse_usize(key, value)?,
            "split.n_public" => cfg.n_public = parse_usize(key, value)?,
            "split.n_test" => cfg.n_test = parse_usize(key, value)?,
            "split.shift" => shift_kind = Some(value.to_string()),
            "split.shift_magnitude" => shift_magnitude = parse_f64(key, value)?,
            "split.imbalance_ratio" => {
                imbalance_ratio = parse_f64(key, value)?;
                if !(0.0..=1.0).contains(&imbalance_ratio) {
                    return Err(bad(key, format!("must be in [0, 1], got {imbalance_ratio}")));
                }
            }
            "algorithm.name" => {
                cfg.algorithm = AlgorithmName::parse(value).ok_or_else(|| {
                    bad(
                        key,
                        format!(
                            "unknown algorithm {value:?}; expected one of sgd, mezo, dpsgd, \
                             dpzero, pazo-m, pazo-p, pazo-pprime, pazo-s"
                        ),
                    )
                })?
            }
            "algorithm.eta" => cfg.eta = positive(key, parse_f64(key, value)?)?,
            "algorithm.alpha" => {
                cfg.alpha = parse_f64(key, value)?;
                if !(0.0..=1.0).contains(&cfg.alpha) {
                    return Err(bad(key, format!("must be in [0, 1], got {}", cfg.alpha)));
                }
            }
            "algorithm.q" => {
                cfg.q = parse_usize(key, value)?;
                if cfg.q == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "algorithm.lambda" => cfg.lambda = positive(key, parse_f64(key, value)?)?,
            "algorithm.k" => {
                cfg.k = parse_usize(key, value)?;
                if cfg.k == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "algorithm.public_batch" => {
                cfg.public_batch = parse_usize(key, value)?;
                if cfg.public_batch == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "algorithm.perturb_scale" => {
                cfg.perturb_scale = parse_f64(key, value)?;
                if cfg.perturb_scale < 0.0 {
                    return Err(bad(key, "must be >= 0"));
                }
            }
            "algorithm.direction" => {
                cfg.direction = match value {
                    "sphere" => DirectionKind::Sphere,
                    "gaussian" => DirectionKind::Gaussian,
                    _ => return Err(bad(key, format!("expected sphere or gaussian, got {value:?}"))),
                }
            }
            "privacy.epsilons" => {
                let mut eps = Vec::new();
                for field in value.split(',') {
                    let e = parse_f64(key, field.trim())?;
                    if e <= 0.0 {
                        return Err(bad(key, format!("every epsilon must be > 0, got {e}")));
                    }
                    eps.push(e);
                }
                if eps.is_empty() {
                    return Err(bad(key, "need at least one epsilon"));
                }
                cfg.epsilons = eps;
            }
            "privacy.sigma" => cfg.sigma = Some(positive(key, parse_f64(key, value)?)?),
            "privacy.delta" => {
                let d = parse_f64(key, value)?;
                if !(0.0 < d && d < 1.0) {
                    return Err(bad(key, format!("must be in (0, 1), got {d}")));
                }
                cfg.delta = d;
                delta_set = true;
            }
            "privacy.clip_c" => cfg.clip_c = positive(key, parse_f64(key, value)?)?,
            "run.t" => cfg.rounds = parse_u64(key, value)?,
            "run.eval_every" => {
                cfg.eval_every = parse_u64(key, value)?;
                if cfg.eval_every == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "run.batch" => {
                cfg.batch = parse_usize(key, value)?;
                if cfg.batch == 0 {
                    return Err(bad(key, "must be >= 1"));
                }
            }
            "run.seeds" => {
                let mut seeds = Vec::new();
                for field in value.split(',') {
                    seeds.push(parse_u64(key, field.trim())?);
                }
                if seeds.is_empty() {
                    return Err(bad(key, "need at least one seed"));
                }
                cfg.seeds = seeds;
            }
            "output.dir" => cfg.output_dir = PathBuf::from(value),
            _ => unknown.push(key.to_string()),
        }
    }
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys { keys: unknown });
    }

    cfg.shift = match shift_kind.as_deref() {
        None | Some("none") => ShiftKind::None,
        Some("mean_shift") => ShiftKind::MeanShift {
            magnitude: shift_magnitude,
        },
        Some("class_imbalance") => ShiftKind::ClassImbalance {
            ratio: imbalance_ratio,
        },
        Some(other) => {
            return Err(bad(
                "split.shift",
                format!("expected none, mean_shift, or class_imbalance, got {other:?}"),
            ))
        }
    };
    if !delta_set {
        cfg.delta = 1.0 / cfg.n_private as f64;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    if cfg.dim == 0 {
        return Err(bad("problem.dim", "must be >= 1"));
    }
    if cfg.quad_mu > cfg.quad_l {
        return Err(bad("problem.mu", "must satisfy mu <= l"));
    }
    if cfg.problem_kind == ProblemKind::Csv && cfg.csv_path.is_none() {
        return Err(bad("problem.csv_path", "required when problem.kind = csv"));
    }
    if cfg.n_private == 0 || cfg.n_public == 0 {
        return Err(bad("split.n_private", "private and public counts must be >= 1"));
    }
    if cfg.batch > cfg.n_private {
        return Err(bad(
            "run.batch",
            format!("batch {} exceeds n_private {}", cfg.batch, cfg.n_private),
        ));
    }
    let public_need = match cfg.algorithm {
        AlgorithmName::PazoM => cfg.public_batch,
        AlgorithmName::PazoP | AlgorithmName::PazoPPrime => cfg.public_batch,
        AlgorithmName::PazoS => cfg.k * cfg.public_batch,
        _ => 0,
    };
    if public_need > cfg.n_public {
        return Err(bad(
            "algorithm.public_batch",
            format!(
                "needs {} public samples per iteration but split.n_public is {}",
                public_need, cfg.n_public
            ),
        ));
    }
    if cfg.sigma.is_some() && cfg.epsilons != vec![1.0] {
        return Err(bad(
            "privacy.sigma",
            "give either privacy.sigma or privacy.epsilons, not both",
        ));
    }
    Ok(())
}

/// Canonical serialization; parses back to an equal config.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push(
        "problem.kind",
        match cfg.problem_kind {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Logistic => "logistic",
            ProblemKind::Csv => "csv",
        }
        .to_string(),
    );
    push("problem.dim", cfg.dim.to_string());
    push("problem.seed", cfg.data_seed.to_string());
    push("problem.mu", cfg.quad_mu.to_string());
    push("problem.l", cfg.quad_l.to_string());
    push("problem.spread", cfg.quad_spread.to_string());
    push("problem.reg", cfg.reg.to_string());
    push("problem.condition", cfg.condition.to_string());
    if let Some(path) = &cfg.csv_path {
        push("problem.csv_path", path.display().to_string());
        push("problem.csv_has_header", cfg.csv_has_header.to_string());
    }
    push("split.n_private", cfg.n_private.to_string());
    push("split.n_public", cfg.n_public.to_string());
    push("split.n_test", cfg.n_test.to_string());
    match cfg.shift {
        ShiftKind::None => push("split.shift", "none".to_string()),
        ShiftKind::MeanShift { magnitude } => {
            push("split.shift", "mean_shift".to_string());
            push("split.shift_magnitude", magnitude.to_string());
        }
        ShiftKind::ClassImbalance { ratio } => {
            push("split.shift", "class_imbalance".to_string());
            push("split.imbalance_ratio", ratio.to_string());
        }
    }
    push("algorithm.name", cfg.algorithm.as_str().to_string());
    push("algorithm.eta", cfg.eta.to_string());
    push("algorithm.alpha", cfg.alpha.to_string());
    push("algorithm.q", cfg.q.to_string());
    push("algorithm.lambda", cfg.lambda.to_string());
    push("algorithm.k", cfg.k.to_string());
    push("algorithm.public_batch", cfg.public_batch.to_string());
    push("algorithm.perturb_scale", cfg.perturb_scale.to_string());
    push(
        "algorithm.direction",
        match cfg.direction {
            DirectionKind::Sphere => "sphere",
            DirectionKind::Gaussian => "gaussian",
        }
        .to_string(),
    );
    push(
        "privacy.epsilons",
        cfg.epsilons
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    if let Some(sigma) = cfg.sigma {
        push("privacy.sigma", sigma.to_string());
    }
    push("privacy.delta", cfg.delta.to_string());
    push("privacy.clip_c", cfg.clip_c.to_string());
    push("run.t", cfg.rounds.to_string());
    push("run.eval_every", cfg.eval_every.to_string());
    push("run.batch", cfg.batch.to_string());
    push(
        "run.seeds",
        cfg.seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    push("output.dir", cfg.output_dir.display().to_string());
    out
}

/// Instantiate the configured problem and its private/public/test split.
pub fn build_problem(
    cfg: &ExperimentConfig,
) -> Result<(Box<dyn Problem>, SplitIndices), ConfigError> {
    let total = cfg.n_private + cfg.n_public + cfg.n_test;
    match cfg.problem_kind {
        ProblemKind::Quadratic => {
            let problem = make_quadratic(
                cfg.dim,
                cfg.quad_mu,
                cfg.quad_l,
                total,
                cfg.quad_spread,
                cfg.data_seed,
            )?;
            Ok((Box::new(problem), contiguous_split(cfg)))
        }
        ProblemKind::Logistic => {
            let split = SplitSpec {
                n_private: cfg.n_private,
                n_public: cfg.n_public,
                n_test: cfg.n_test,
                shift: cfg.shift,
                seed: cfg.data_seed,
            };
            let (problem, idx) = make_logistic_split(cfg.dim, cfg.reg, cfg.condition, &split)?;
            Ok((Box::new(problem), idx))
        }
        ProblemKind::Csv => {
            let path = cfg.csv_path.as_ref().expect("validated");
            let problem = load_csv_dataset(path, cfg.csv_has_header, cfg.reg)?;
            if problem.n_samples() < total {
                return Err(ConfigError::Data(DataError::PoolTooSmall {
                    needed: total,
                    available: problem.n_samples(),
                }));
            }
            Ok((Box::new(problem), contiguous_split(cfg)))
        }
    }
}

fn contiguous_split(cfg: &ExperimentConfig) -> SplitIndices {
    SplitIndices {
        private: (0..cfg.n_private).collect(),
        public: (cfg.n_private..cfg.n_private + cfg.n_public).collect(),
        test: (cfg.n_private + cfg.n_public..cfg.n_private + cfg.n_public + cfg.n_test).collect(),
    }
}

/// Instantiate the configured algorithm.
pub fn build_algorithm(cfg: &ExperimentConfig) -> Algorithm {
    match cfg.algorithm {
        AlgorithmName::Sgd => Algorithm::Sgd { eta: cfg.eta },
        AlgorithmName::DpSgd => Algorithm::DpSgd { eta: cfg.eta },
        AlgorithmName::Mezo => Algorithm::Mezo(DpZeroConfig {
            eta: cfg.eta,
            q: cfg.q,
            lambda: cfg.lambda,
            radius: None,
            direction: cfg.direction,
        }),
        AlgorithmName::DpZero => Algorithm::DpZero(DpZeroConfig {
            eta: cfg.eta,
            q: cfg.q,
            lambda: cfg.lambda,
            radius: None,
            direction: cfg.direction,
        }),
        AlgorithmName::PazoM => Algorithm::PazoM(PazoMConfig {
            eta: cfg.eta,
            alpha: cfg.alpha,
            q: cfg.q,
            lambda: cfg.lambda,
            public_batch: cfg.public_batch,
            direction: cfg.direction,
        }),
        AlgorithmName::PazoP | AlgorithmName::PazoPPrime => Algorithm::PazoP(PazoPConfig {
            eta: cfg.eta,
            k: cfg.k,
            q: cfg.q,
            lambda: cfg.lambda,
            public_batch: cfg.public_batch,
            orthonormalize: cfg.algorithm == AlgorithmName::PazoP,
            direction: cfg.direction,
        }),
        AlgorithmName::PazoS => Algorithm::PazoS(PazoSConfig {
            eta: cfg.eta,
            k: cfg.k,
            public_batch: cfg.public_batch,
            perturb_scale: cfg.perturb_scale,
        }),
    }
}
