//! The per-sample objective abstraction.

use crate::rng::RngStream;
use crate::vector::ParamVector;

/// A per-sample objective f(x; xi) with function evaluation everywhere and
/// analytic per-sample gradients. Gradients are used for public data, the
/// first-order baselines, and test oracles; the private side of the zeroth
/// order methods only ever calls `eval_one`.
///
/// Implementations must be deterministic functions of (x, sample_id) and are
/// immutable once constructed, so they can be shared across threads.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn n_samples(&self) -> usize;

    /// Loss of sample `sample_id` at parameters `x`.
    fn eval_one(&self, x: &ParamVector, sample_id: usize) -> f64;

    /// Analytic gradient of `eval_one` with respect to `x`.
    fn grad_one(&self, x: &ParamVector, sample_id: usize) -> ParamVector;

    /// Smoothness constant L, when known analytically.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Lipschitz constant M, when known analytically.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Whether the prediction for `sample_id` is correct at `x`.
    /// `None` for problems without a classification readout.
    fn correct(&self, _x: &ParamVector, _sample_id: usize) -> Option<bool> {
        None
    }
}

/// Mean loss over an id set, summed in the given order.
pub fn mean_loss(problem: &dyn Problem, x: &ParamVector, ids: &[usize]) -> f64 {
    assert!(!ids.is_empty(), "mean_loss over empty id set");
    let sum: f64 = ids.iter().map(|&i| problem.eval_one(x, i)).sum();
    sum / ids.len() as f64
}

/// Mean gradient over an id set.
pub fn mean_gradient(problem: &dyn Problem, x: &ParamVector, ids: &[usize]) -> ParamVector {
    assert!(!ids.is_empty(), "mean_gradient over empty id set");
    let mut acc = ParamVector::zeros(problem.dim());
    for &i in ids {
        acc.axpy(1.0, &problem.grad_one(x, i));
    }
    acc.scale(1.0 / ids.len() as f64);
    acc
}

/// Largest relative error between `grad_one` and a central finite difference
/// of `eval_one` over `probes` random (x, sample) pairs. Test oracle.
pub fn gradient_consistency(
    problem: &dyn Problem,
    probes: usize,
    step: f64,
    rng: &mut RngStream,
) -> f64 {
    let d = problem.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = ParamVector::new((0..d).map(|_| rng.standard_normal()).collect());
        let id = rng.below(problem.n_samples());
        let g = problem.grad_one(&x, id);
        let mut fd = ParamVector::zeros(d);
        for j in 0..d {
            let mut xp = x.clone();
            xp[j] += step;
            let mut xm = x.clone();
            xm[j] -= step;
            fd[j] = (problem.eval_one(&xp, id) - problem.eval_one(&xm, id)) / (2.0 * step);
        }
        let diff = fd.sub(&g).norm();
        let scale = g.norm().max(1.0);
        worst = worst.max(diff / scale);
    }
    worst
}
