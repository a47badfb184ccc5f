//! Gamma-similarity measurement, evaluation metrics, and the projection
//! oracle used by subspace tests.

use thiserror::Error;

use crate::problem::{mean_gradient, mean_loss, Problem};
use crate::vector::ParamVector;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("basis is not orthonormal: |Q^T Q - I| reaches {max_dev}")]
    NotOrthonormal { max_dev: f64 },
}

/// Full-gradient distance between public and private data along a trajectory.
/// gamma is the maximum over the recorded checkpoints; since it is measured
/// at checkpoints rather than every iteration it is a documented
/// approximation of the supremum over all t.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub per_checkpoint: Vec<f64>,
    pub gamma: f64,
}

/// ||grad f'(x_t) - grad f(x_t)|| at each checkpoint, where f' and f are the
/// full public and private objectives; the report's gamma is the max.
pub fn gamma_similarity(
    problem: &dyn Problem,
    trajectory: &[ParamVector],
    private_ids: &[usize],
    public_ids: &[usize],
) -> GammaReport {
    assert!(!private_ids.is_empty() && !public_ids.is_empty());
    let per_checkpoint: Vec<f64> = trajectory
        .iter()
        .map(|x| {
            let g_private = mean_gradient(problem, x, private_ids);
            let g_public = mean_gradient(problem, x, public_ids);
            g_public.sub(&g_private).norm()
        })
        .collect();
    let gamma = per_checkpoint.iter().copied().fold(0.0f64, f64::max);
    GammaReport {
        per_checkpoint,
        gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub mean_loss: f64,
    /// Fraction of correct predictions; `None` for problems without a
    /// classification readout.
    pub accuracy: Option<f64>,
}

pub fn evaluate(problem: &dyn Problem, x: &ParamVector, ids: &[usize]) -> EvalResult {
    assert!(!ids.is_empty());
    let loss = mean_loss(problem, x, ids);
    let mut hits = 0usize;
    let mut counted = 0usize;
    for &id in ids {
        if let Some(ok) = problem.correct(x, id) {
            counted += 1;
            if ok {
                hits += 1;
            }
        }
    }
    let accuracy = if counted == ids.len() {
        Some(hits as f64 / counted as f64)
    } else {
        None
    };
    EvalResult {
        mean_loss: loss,
        accuracy,
    }
}

/// G G^T v for an orthonormal set of columns. Errors when G^T G deviates
/// from the identity by more than 1e-10 entrywise.
pub fn bruteforce_projection(
    columns: &[ParamVector],
    v: &ParamVector,
) -> Result<ParamVector, MetricsError> {
    let mut max_dev: f64 = 0.0;
    for (i, a) in columns.iter().enumerate() {
        for (j, b) in columns.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((a.dot(b) - want).abs());
        }
    }
    if max_dev > 1e-10 {
        return Err(MetricsError::NotOrthonormal { max_dev });
    }
    let mut out = ParamVector::zeros(v.dim());
    for q in columns {
        out.axpy(q.dot(v), q);
    }
    Ok(out)
}
