//! The training algorithms as single-step functions: DPZero, PAZO-M,
//! PAZO-P (orthonormalized or normalize-only), PAZO-S, and DP-SGD. The
//! non-private references (SGD, MeZO) are the same steps with sigma = 0 and
//! no clipping.
//!
//! A single run is sequential over iterations; within an iteration every
//! reduction happens in a fixed order, so runs replay bit for bit from their
//! seed.

pub mod driver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::privacy::{noise_for_query, noise_for_selection, PrivacySpec};
use crate::problem::{mean_gradient, Problem};
use crate::rng::RngStream;
use crate::sampling::{
    clipped_sum_delta, sample_direction, DirectionKind, SamplingError, SphereSpec, TwoPointQuery,
};
use crate::vector::ParamVector;

pub use driver::{run_training, Algorithm, Checkpoint, RunOptions, RunRecord, RunStatus};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("non-finite parameters after step {iteration}")]
    NonFiniteUpdate { iteration: u64 },
    #[error("step {iteration}: {source}")]
    Probe {
        iteration: u64,
        source: SamplingError,
    },
    #[error("zero column at index {index} passed to orthonormalization")]
    ZeroColumn { index: usize },
    #[error("no usable directions: effective k = 0 after rank handling")]
    EmptyBasis,
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
}

/// Operation ledger. A private forward is one batched function evaluation
/// (one probe point), a public forward+backward is one public batch gradient,
/// and the first-order steps count one private forward and one private
/// backward per sample of their per-sample gradients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub private_forward: u64,
    pub public_forward_backward: u64,
    pub private_backward: u64,
}

impl OpCounts {
    pub fn minus(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            private_forward: self.private_forward - earlier.private_forward,
            public_forward_backward: self.public_forward_backward
                - earlier.public_forward_backward,
            private_backward: self.private_backward - earlier.private_backward,
        }
    }
}

/// The per-run randomness sources. Each is an independent labeled stream so
/// that algorithms which skip a source still replay identically on the ones
/// they use.
#[derive(Debug, Clone)]
pub struct StepStreams {
    /// Zeroth-order directions u.
    pub perturbation: RngStream,
    /// Privacy noise z.
    pub noise: RngStream,
    /// The selection method's exploratory vector z'.
    pub candidate: RngStream,
}

impl StepStreams {
    pub fn from_root(root: &RngStream) -> Self {
        StepStreams {
            perturbation: root.child("perturbation"),
            noise: root.child("noise"),
            candidate: root.child("candidate"),
        }
    }
}

/// Mutable optimizer state threaded through the step functions.
#[derive(Debug, Clone)]
pub struct OptState {
    pub x: ParamVector,
    pub t: u64,
    pub streams: StepStreams,
    pub ops: OpCounts,
    /// When set, every privacy-noise draw made by a step is appended here.
    pub noise_tap: Option<Vec<f64>>,
    /// Candidate chosen by the most recent selection step (0-based).
    pub last_selected: Option<usize>,
}

impl OptState {
    pub fn new(x: ParamVector, streams: StepStreams) -> Self {
        OptState {
            x,
            t: 0,
            streams,
            ops: OpCounts::default(),
            noise_tap: None,
            last_selected: None,
        }
    }

    fn finish_step(&mut self) -> Result<(), OptimError> {
        if !self.x.is_finite() {
            return Err(OptimError::NonFiniteUpdate { iteration: self.t });
        }
        self.t += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpZeroConfig {
    pub eta: f64,
    pub q: usize,
    pub lambda: f64,
    /// Perturbation sphere radius; `None` means sqrt(d).
    pub radius: Option<f64>,
    pub direction: DirectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PazoMConfig {
    pub eta: f64,
    /// Mixing coefficient in [0, 1]: 1 is pure public gradient descent,
    /// 0 is pure private zeroth-order.
    pub alpha: f64,
    pub q: usize,
    pub lambda: f64,
    /// Public batch size b'.
    pub public_batch: usize,
    pub direction: DirectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PazoPConfig {
    pub eta: f64,
    /// Number of public batch gradients spanning the search subspace.
    pub k: usize,
    pub q: usize,
    pub lambda: f64,
    pub public_batch: usize,
    /// true: orthonormalized columns; false: normalize-only (the prime
    /// variant).
    pub orthonormalize: bool,
    pub direction: DirectionKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PazoSConfig {
    pub eta: f64,
    pub k: usize,
    pub public_batch: usize,
    /// Standard deviation of the exploratory perturbation z' added to the
    /// best public gradient. Unrelated to the privacy budget.
    pub perturb_scale: f64,
}

// ---------------------------------------------------------------------------
// Shared zeroth-order core
// ---------------------------------------------------------------------------

/// Orthonormalization mode for the public gradient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrthoMode {
    Orthonormal,
    NormalizeOnly,
}

/// Column basis of the public gradient subspace.
#[derive(Debug, Clone)]
pub struct Basis {
    columns: Vec<ParamVector>,
}

impl Basis {
    pub fn identity(dim: usize) -> Self {
        let columns = (0..dim)
            .map(|i| {
                let mut e = ParamVector::zeros(dim);
                e[i] = 1.0;
                e
            })
            .collect();
        Basis { columns }
    }

    pub fn from_columns(columns: Vec<ParamVector>) -> Self {
        assert!(!columns.is_empty());
        Basis { columns }
    }

    /// Effective number of directions.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ParamVector] {
        &self.columns
    }

    /// G u: map coefficients in R^k to the ambient space.
    pub fn map(&self, u: &ParamVector) -> ParamVector {
        assert_eq!(u.dim(), self.columns.len());
        let mut out = ParamVector::zeros(self.columns[0].dim());
        for (j, col) in self.columns.iter().enumerate() {
            out.axpy(u[j], col);
        }
        out
    }
}

/// Orthonormal mode: modified Gram-Schmidt in input column order, dropping
/// columns whose residual falls below 1e-10 of their norm (effective k may
/// shrink). Normalize-only mode: each column rescaled to unit norm,
/// directions untouched.
pub fn orthonormalize_columns(
    columns: &[ParamVector],
    mode: OrthoMode,
) -> Result<Basis, OptimError> {
    const RANK_TOL: f64 = 1e-10;
    let mut out: Vec<ParamVector> = Vec::with_capacity(columns.len());
    for (index, col) in columns.iter().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(OptimError::ZeroColumn { index });
        }
        match mode {
            OrthoMode::NormalizeOnly => out.push(col.scaled(1.0 / norm)),
            OrthoMode::Orthonormal => {
                let mut v = col.clone();
                for q in &out {
                    let proj = q.dot(&v);
                    v.axpy(-proj, q);
                }
                let residual = v.norm();
                if residual <= RANK_TOL * norm {
                    log::debug!("dropping dependent public gradient column {index}");
                    continue;
                }
                v.scale(1.0 / residual);
                out.push(v);
            }
        }
    }
    if out.is_empty() {
        return Err(OptimError::EmptyBasis);
    }
    Ok(Basis { columns: out })
}

struct ZoGeometry<'a> {
    draw_dim: usize,
    radius: f64,
    kind: DirectionKind,
    basis: Option<&'a Basis>,
}

/// g~/q: the q-query average of (clip-summed delta / b + z) v, where v is
/// the sampled direction (mapped through the basis when present). This is
/// the one code path every zeroth-order variant shares, so the degeneracy
/// identities between them hold bitwise.
#[allow(clippy::too_many_arguments)]
fn zo_averaged_estimate(
    problem: &dyn Problem,
    x: &ParamVector,
    private_batch: &[usize],
    spec: &PrivacySpec,
    q: usize,
    lambda: f64,
    geometry: &ZoGeometry,
    streams: &mut StepStreams,
    ops: &mut OpCounts,
    noise_tap: &mut Option<Vec<f64>>,
    iteration: u64,
) -> Result<ParamVector, OptimError> {
    let sphere = SphereSpec::new(geometry.draw_dim, geometry.radius);
    let b_nominal = spec.batch_b as f64;
    let mut acc = ParamVector::zeros(x.dim());
    for _ in 0..q {
        let u = sample_direction(&sphere, geometry.kind, &mut streams.perturbation);
        let v = match geometry.basis {
            Some(basis) => basis.map(&u),
            None => u,
        };
        let query = TwoPointQuery::new(v, lambda, spec.clip_c)
            .map_err(|source| OptimError::Probe { iteration, source })?;
        let sum = clipped_sum_delta(problem, x, &query, private_batch)
            .map_err(|source| OptimError::Probe { iteration, source })?;
        ops.private_forward += 2;
        let z = noise_for_query(spec, &mut streams.noise);
        if let Some(tap) = noise_tap {
            tap.push(z);
        }
        acc.axpy(sum / b_nominal + z, &query.direction);
    }
    acc.scale(1.0 / q as f64);
    Ok(acc)
}

fn ensure_queries_match(q: usize, spec: &PrivacySpec) -> Result<(), OptimError> {
    if q != spec.queries_q {
        return Err(OptimError::ConfigMismatch(format!(
            "config runs q={q} queries but the privacy spec accounts for queries_q={}",
            spec.queries_q
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

/// x <- x - eta * avg_q[(clipped batch delta + z) u], u on the sqrt(d)
/// sphere unless the config overrides the radius.
pub fn dpzero_step(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    spec: &PrivacySpec,
    cfg: &DpZeroConfig,
) -> Result<(), OptimError> {
    ensure_queries_match(cfg.q, spec)?;
    let d = problem.dim();
    let geometry = ZoGeometry {
        draw_dim: d,
        radius: cfg.radius.unwrap_or_else(|| (d as f64).sqrt()),
        kind: cfg.direction,
        basis: None,
    };
    let OptState {
        x,
        t,
        streams,
        ops,
        noise_tap,
        ..
    } = state;
    let estimate = zo_averaged_estimate(
        problem,
        x,
        private_batch,
        spec,
        cfg.q,
        cfg.lambda,
        &geometry,
        streams,
        ops,
        noise_tap,
        *t,
    )?;
    x.axpy(-cfg.eta, &estimate);
    state.finish_step()
}

/// x <- x - eta (alpha g_pub + (1 - alpha) g~/q) with zeroth-order
/// directions on the d^{1/4} sphere so the two terms are norm-aligned.
/// alpha = 1 skips the zeroth-order work entirely and alpha = 0 skips the
/// public gradient, which makes the two degeneracies bitwise.
pub fn pazo_m_step(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    public_batch: &[usize],
    spec: &PrivacySpec,
    cfg: &PazoMConfig,
) -> Result<(), OptimError> {
    ensure_queries_match(cfg.q, spec)?;
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(OptimError::ConfigMismatch(format!(
            "alpha must be in [0, 1], got {}",
            cfg.alpha
        )));
    }
    let d = problem.dim();
    let geometry = ZoGeometry {
        draw_dim: d,
        radius: (d as f64).powf(0.25),
        kind: cfg.direction,
        basis: None,
    };
    let OptState {
        x,
        t,
        streams,
        ops,
        noise_tap,
        ..
    } = state;
    if cfg.alpha == 1.0 {
        let g_pub = mean_gradient(problem, x, public_batch);
        ops.public_forward_backward += 1;
        x.axpy(-cfg.eta, &g_pub);
    } else if cfg.alpha == 0.0 {
        let estimate = zo_averaged_estimate(
            problem,
            x,
            private_batch,
            spec,
            cfg.q,
            cfg.lambda,
            &geometry,
            streams,
            ops,
            noise_tap,
            *t,
        )?;
        x.axpy(-cfg.eta, &estimate);
    } else {
        let g_pub = mean_gradient(problem, x, public_batch);
        ops.public_forward_backward += 1;
        let estimate = zo_averaged_estimate(
            problem,
            x,
            private_batch,
            spec,
            cfg.q,
            cfg.lambda,
            &geometry,
            streams,
            ops,
            noise_tap,
            *t,
        )?;
        let mut mixed = g_pub.scaled(cfg.alpha);
        mixed.axpy(1.0 - cfg.alpha, &estimate);
        x.axpy(-cfg.eta, &mixed);
    }
    state.finish_step()
}

/// Build the search basis from public batch gradients at the current point.
pub fn public_gradient_basis(
    problem: &dyn Problem,
    x: &ParamVector,
    public_batches: &[Vec<usize>],
    mode: OrthoMode,
    ops: &mut OpCounts,
) -> Result<Basis, OptimError> {
    let columns: Vec<ParamVector> = public_batches
        .iter()
        .map(|batch| {
            ops.public_forward_backward += 1;
            mean_gradient(problem, x, batch)
        })
        .collect();
    orthonormalize_columns(&columns, mode)
}

/// PAZO-P with an externally supplied basis: x <- x - eta g~/q where every
/// probe and update direction is G u, u on the sqrt(k) sphere.
pub fn pazo_p_step_with_basis(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    basis: &Basis,
    spec: &PrivacySpec,
    cfg: &PazoPConfig,
) -> Result<(), OptimError> {
    ensure_queries_match(cfg.q, spec)?;
    let k_eff = basis.k();
    let geometry = ZoGeometry {
        draw_dim: k_eff,
        radius: (k_eff as f64).sqrt(),
        kind: cfg.direction,
        basis: Some(basis),
    };
    let OptState {
        x,
        t,
        streams,
        ops,
        noise_tap,
        ..
    } = state;
    let estimate = zo_averaged_estimate(
        problem,
        x,
        private_batch,
        spec,
        cfg.q,
        cfg.lambda,
        &geometry,
        streams,
        ops,
        noise_tap,
        *t,
    )?;
    x.axpy(-cfg.eta, &estimate);
    state.finish_step()
}

/// PAZO-P proper: (ortho)normalize the k public batch gradients, then search
/// inside their span.
pub fn pazo_p_step(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    public_batches: &[Vec<usize>],
    spec: &PrivacySpec,
    cfg: &PazoPConfig,
) -> Result<(), OptimError> {
    let mode = if cfg.orthonormalize {
        OrthoMode::Orthonormal
    } else {
        OrthoMode::NormalizeOnly
    };
    let basis = public_gradient_basis(problem, &state.x, public_batches, mode, &mut state.ops)?;
    pazo_p_step_with_basis(state, problem, private_batch, &basis, spec, cfg)
}

/// Noisy clipped mean loss of one candidate point over the private batch.
/// A non-finite sample loss sends the candidate to +infinity so it can never
/// be selected.
#[allow(clippy::too_many_arguments)]
fn noisy_candidate_loss(
    problem: &dyn Problem,
    candidate: &ParamVector,
    private_batch: &[usize],
    spec: &PrivacySpec,
    k: usize,
    noise: &mut RngStream,
    noise_tap: &mut Option<Vec<f64>>,
    ops: &mut OpCounts,
) -> f64 {
    ops.private_forward += 1;
    let mut sum = 0.0;
    for &id in private_batch {
        let loss = problem.eval_one(candidate, id);
        if !loss.is_finite() {
            log::warn!("non-finite loss for sample {id}; candidate excluded from selection");
            // keep the noise draw so stream positions stay aligned
            let _ = noise_for_selection(spec, k, noise);
            return f64::INFINITY;
        }
        sum += crate::sampling::clip_scalar(loss, spec.clip_c);
    }
    let z = noise_for_selection(spec, k, noise);
    if let Some(tap) = noise_tap {
        tap.push(z);
    }
    sum / spec.batch_b as f64 + z
}

fn argmin_lowest_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// PAZO-S: release k noisy clipped candidate losses, perturb the best public
/// gradient with z' ~ N(0, perturb_scale^2 I), release its loss at the same
/// noise scale, then step along the overall argmin (ties to lowest index).
/// Returns the selected 0-based candidate index (k means the perturbed
/// extra candidate).
pub fn pazo_s_step(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    public_batches: &[Vec<usize>],
    spec: &PrivacySpec,
    cfg: &PazoSConfig,
) -> Result<usize, OptimError> {
    let k = public_batches.len();
    if k == 0 {
        return Err(OptimError::ConfigMismatch(
            "selection needs at least one public batch".into(),
        ));
    }
    let OptState {
        x,
        streams,
        ops,
        noise_tap,
        ..
    } = state;
    let gradients: Vec<ParamVector> = public_batches
        .iter()
        .map(|batch| {
            ops.public_forward_backward += 1;
            mean_gradient(problem, x, batch)
        })
        .collect();
    let mut losses: Vec<f64> = Vec::with_capacity(k + 1);
    for g in &gradients {
        let candidate = x.plus_scaled(-cfg.eta, g);
        losses.push(noisy_candidate_loss(
            problem,
            &candidate,
            private_batch,
            spec,
            k,
            &mut streams.noise,
            noise_tap,
            ops,
        ));
    }
    let j_hat = argmin_lowest_index(&losses);
    let extra = if cfg.perturb_scale == 0.0 {
        gradients[j_hat].clone()
    } else {
        let mut g = gradients[j_hat].clone();
        for i in 0..g.dim() {
            g[i] += cfg.perturb_scale * streams.candidate.standard_normal();
        }
        g
    };
    let extra_point = x.plus_scaled(-cfg.eta, &extra);
    losses.push(noisy_candidate_loss(
        problem,
        &extra_point,
        private_batch,
        spec,
        k,
        &mut streams.noise,
        noise_tap,
        ops,
    ));
    let j_star = argmin_lowest_index(&losses);
    let chosen = if j_star == k { &extra } else { &gradients[j_star] };
    x.axpy(-cfg.eta, chosen);
    state.last_selected = Some(j_star);
    state.finish_step()?;
    Ok(j_star)
}

/// Rescale a gradient to norm at most `clip`, preserving direction.
pub fn clip_vector(g: &ParamVector, clip: f64) -> ParamVector {
    let norm = g.norm();
    if norm > clip {
        g.scaled(clip / norm)
    } else {
        g.clone()
    }
}

/// DP-SGD: x <- x - eta ((1/b) sum_i clip_vector(grad_i, C) + zeta) with
/// zeta ~ N(0, C^2 sigma^2 / b^2 I). sigma = 0 adds nothing, so the
/// non-private reference is the exact mini-batch SGD step.
pub fn dpsgd_step(
    state: &mut OptState,
    problem: &dyn Problem,
    private_batch: &[usize],
    spec: &PrivacySpec,
    eta: f64,
) -> Result<(), OptimError> {
    let OptState {
        x, streams, ops, ..
    } = state;
    let b_nominal = spec.batch_b as f64;
    let mut acc = ParamVector::zeros(problem.dim());
    for &id in private_batch {
        let g = problem.grad_one(x, id);
        ops.private_forward += 1;
        ops.private_backward += 1;
        acc.axpy(1.0, &clip_vector(&g, spec.clip_c));
    }
    acc.scale(1.0 / b_nominal);
    if spec.sigma > 0.0 {
        let std = spec.clip_c * spec.sigma / b_nominal;
        for i in 0..acc.dim() {
            acc[i] += std * streams.noise.standard_normal();
        }
    }
    x.axpy(-eta, &acc);
    state.finish_step()
}
