//! Sphere sampling and the (clipped) two-point function-difference estimators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::Problem;
use crate::rng::RngStream;
use crate::vector::ParamVector;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("non-finite loss at the {probe} probe for sample {sample_id}")]
    NonFiniteProbe { probe: ProbeSide, sample_id: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid {name}: {value} (must be positive)")]
    NotPositive { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeSide {
    Plus,
    Minus,
}

impl std::fmt::Display for ProbeSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProbeSide::Plus => write!(f, "x+lambda*u"),
            ProbeSide::Minus => write!(f, "x-lambda*u"),
        }
    }
}

/// A sphere r * S^{d-1} to draw perturbations from.
///
/// The algorithms here use r = sqrt(d), r = d^{1/4}, and r = sqrt(k), but any
/// positive radius is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub ambient_dim: usize,
    pub radius: f64,
}

impl SphereSpec {
    pub fn new(ambient_dim: usize, radius: f64) -> Self {
        assert!(ambient_dim >= 1, "ambient_dim must be >= 1");
        assert!(radius > 0.0, "radius must be positive");
        SphereSpec {
            ambient_dim,
            radius,
        }
    }

    /// r = sqrt(d), the classic two-point estimator geometry.
    pub fn sqrt_dim(dim: usize) -> Self {
        Self::new(dim, (dim as f64).sqrt())
    }

    /// r = d^{1/4}, the norm-aligned geometry.
    pub fn fourth_root_dim(dim: usize) -> Self {
        Self::new(dim, (dim as f64).powf(0.25))
    }
}

/// How zeroth-order directions are drawn. Sphere is the default; Gaussian
/// draws N(0, I) scaled so E[u u^T] matches the sphere of the same radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionKind {
    Sphere,
    Gaussian,
}

impl Default for DirectionKind {
    fn default() -> Self {
        DirectionKind::Sphere
    }
}

/// Uniform draw from the sphere: Gaussian vector, normalized, then scaled.
/// The zero Gaussian vector (probability ~0) is resampled.
pub fn sample_sphere(spec: &SphereSpec, rng: &mut RngStream) -> ParamVector {
    loop {
        let mut u = ParamVector::new(
            (0..spec.ambient_dim)
                .map(|_| rng.standard_normal())
                .collect(),
        );
        let norm = u.norm();
        if norm > 0.0 {
            u.scale(spec.radius / norm);
            return u;
        }
    }
}

/// Direction draw for the chosen kind. For `Gaussian` the draw is
/// (r / sqrt(d)) * N(0, I_d), which has E[u u^T] = (r^2/d) I_d like the
/// sphere draw of radius r.
pub fn sample_direction(
    spec: &SphereSpec,
    kind: DirectionKind,
    rng: &mut RngStream,
) -> ParamVector {
    match kind {
        DirectionKind::Sphere => sample_sphere(spec, rng),
        DirectionKind::Gaussian => {
            let scale = spec.radius / (spec.ambient_dim as f64).sqrt();
            let mut u = ParamVector::new(
                (0..spec.ambient_dim)
                    .map(|_| rng.standard_normal())
                    .collect(),
            );
            u.scale(scale);
            u
        }
    }
}

/// Hard clamp: v if |v| <= c, else sign(v) * c.
pub fn clip_scalar(v: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0);
    v.clamp(-c, c)
}

/// Smoothing parameter and clipping threshold for a two-point query along a
/// fixed direction.
#[derive(Debug, Clone)]
pub struct TwoPointQuery {
    pub direction: ParamVector,
    pub lambda: f64,
    /// Clipping threshold; `f64::INFINITY` disables clipping.
    pub clip: f64,
}

impl TwoPointQuery {
    pub fn new(direction: ParamVector, lambda: f64, clip: f64) -> Result<Self, SamplingError> {
        if lambda <= 0.0 {
            return Err(SamplingError::NotPositive {
                name: "lambda",
                value: lambda,
            });
        }
        if clip <= 0.0 {
            return Err(SamplingError::NotPositive {
                name: "clip",
                value: clip,
            });
        }
        Ok(TwoPointQuery {
            direction,
            lambda,
            clip,
        })
    }
}

fn delta_at_probes(
    problem: &dyn Problem,
    x_plus: &ParamVector,
    x_minus: &ParamVector,
    lambda: f64,
    sample_id: usize,
) -> Result<f64, SamplingError> {
    let f_plus = problem.eval_one(x_plus, sample_id);
    if !f_plus.is_finite() {
        return Err(SamplingError::NonFiniteProbe {
            probe: ProbeSide::Plus,
            sample_id,
        });
    }
    let f_minus = problem.eval_one(x_minus, sample_id);
    if !f_minus.is_finite() {
        return Err(SamplingError::NonFiniteProbe {
            probe: ProbeSide::Minus,
            sample_id,
        });
    }
    Ok((f_plus - f_minus) / (2.0 * lambda))
}

/// (f(x + lambda u; xi) - f(x - lambda u; xi)) / (2 lambda).
pub fn two_point_delta(
    problem: &dyn Problem,
    x: &ParamVector,
    direction: &ParamVector,
    lambda: f64,
    sample_id: usize,
) -> Result<f64, SamplingError> {
    let x_plus = x.plus_scaled(lambda, direction);
    let x_minus = x.plus_scaled(-lambda, direction);
    delta_at_probes(problem, &x_plus, &x_minus, lambda, sample_id)
}

/// Sum over the batch of clipped per-sample two-point deltas. The probes are
/// evaluated once and the reduction order is the batch order, so results are
/// deterministic. This is the quantity with add/remove sensitivity at most
/// `clip`.
pub fn clipped_sum_delta(
    problem: &dyn Problem,
    x: &ParamVector,
    query: &TwoPointQuery,
    batch: &[usize],
) -> Result<f64, SamplingError> {
    let x_plus = x.plus_scaled(query.lambda, &query.direction);
    let x_minus = x.plus_scaled(-query.lambda, &query.direction);
    let mut sum = 0.0;
    for &id in batch {
        let delta = delta_at_probes(problem, &x_plus, &x_minus, query.lambda, id)?;
        sum += clip_scalar(delta, query.clip);
    }
    Ok(sum)
}

/// Mean over the batch of clipped per-sample two-point deltas.
pub fn clipped_batch_delta(
    problem: &dyn Problem,
    x: &ParamVector,
    query: &TwoPointQuery,
    batch: &[usize],
) -> Result<f64, SamplingError> {
    if batch.is_empty() {
        return Err(SamplingError::EmptyBatch);
    }
    Ok(clipped_sum_delta(problem, x, query, batch)? / batch.len() as f64)
}

/// Monte Carlo estimate of the smoothed gradient: the average of
/// two_point_delta * u over `n_draws` fresh sphere directions, with the loss
/// taken as the mean over `ids`. Unbiased for E_u[g_lambda(x)]. Test oracle.
pub fn mc_smoothed_gradient(
    problem: &dyn Problem,
    ids: &[usize],
    x: &ParamVector,
    lambda: f64,
    radius: f64,
    n_draws: usize,
    rng: &mut RngStream,
) -> Result<ParamVector, SamplingError> {
    assert!(n_draws >= 1);
    if ids.is_empty() {
        return Err(SamplingError::EmptyBatch);
    }
    let spec = SphereSpec::new(x.dim(), radius);
    let mut acc = ParamVector::zeros(x.dim());
    for _ in 0..n_draws {
        let u = sample_sphere(&spec, rng);
        let query = TwoPointQuery::new(u, lambda, f64::INFINITY).expect("valid query");
        let delta = clipped_batch_delta(problem, x, &query, ids)?;
        acc.axpy(delta, &query.direction);
    }
    acc.scale(1.0 / n_draws as f64);
    Ok(acc)
}
