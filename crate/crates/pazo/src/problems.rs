//! Built-in desk-scale objectives and dataset generators with a controllable
//! public/private distribution-shift knob.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::Problem;
use crate::rng::{gaussian_standard, RngStream};
use crate::vector::ParamVector;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("degenerate single-class public split (all labels equal); increase n_public or request class_imbalance")]
    SingleClassPublic,
    #[error("split needs {needed} samples but the pool has {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("csv row {row}: {reason}")]
    Csv { row: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// The quadratic form A of a quadratic objective.
#[derive(Debug, Clone)]
pub enum QuadForm {
    /// A = c * I. Matvec is exact, which keeps mu = L problems bit-clean.
    Scaled(f64),
    /// A = Q diag(eigenvalues) Q^T with orthonormal columns in `basis`.
    Spectral {
        basis: Vec<ParamVector>,
        eigenvalues: Vec<f64>,
    },
}

impl QuadForm {
    pub fn dim(&self, fallback: usize) -> usize {
        match self {
            QuadForm::Scaled(_) => fallback,
            QuadForm::Spectral { basis, .. } => basis[0].dim(),
        }
    }

    pub fn matvec(&self, v: &ParamVector) -> ParamVector {
        match self {
            QuadForm::Scaled(c) => v.scaled(*c),
            QuadForm::Spectral { basis, eigenvalues } => {
                let mut out = ParamVector::zeros(v.dim());
                for (q, &lam) in basis.iter().zip(eigenvalues) {
                    out.axpy(lam * q.dot(v), q);
                }
                out
            }
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match self {
            QuadForm::Scaled(c) => *c,
            QuadForm::Spectral { eigenvalues, .. } => {
                eigenvalues.iter().copied().fold(f64::MIN, f64::max)
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            QuadForm::Scaled(c) => *c,
            QuadForm::Spectral { eigenvalues, .. } => {
                eigenvalues.iter().copied().fold(f64::MAX, f64::min)
            }
        }
    }
}

/// f(x; xi_i) = 0.5 (x - c_i)^T A (x - c_i) with per-sample centers c_i.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    form: QuadForm,
    centers: Vec<ParamVector>,
}

impl QuadraticProblem {
    pub fn with_centers(form: QuadForm, centers: Vec<ParamVector>) -> Self {
        assert!(!centers.is_empty());
        QuadraticProblem { form, centers }
    }

    pub fn form(&self) -> &QuadForm {
        &self.form
    }

    pub fn centers(&self) -> &[ParamVector] {
        &self.centers
    }

    pub fn mean_center(&self) -> ParamVector {
        let mut c = ParamVector::zeros(self.dim());
        for ci in &self.centers {
            c.axpy(1.0, ci);
        }
        c.scale(1.0 / self.centers.len() as f64);
        c
    }
}

impl Problem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    fn n_samples(&self) -> usize {
        self.centers.len()
    }

    fn eval_one(&self, x: &ParamVector, sample_id: usize) -> f64 {
        let diff = x.sub(&self.centers[sample_id]);
        0.5 * diff.dot(&self.form.matvec(&diff))
    }

    fn grad_one(&self, x: &ParamVector, sample_id: usize) -> ParamVector {
        self.form.matvec(&x.sub(&self.centers[sample_id]))
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.form.max_eigenvalue())
    }
}

/// Random orthonormal basis via modified Gram-Schmidt on Gaussian columns.
fn random_orthonormal_basis(dim: usize, rng: &mut RngStream) -> Vec<ParamVector> {
    let mut basis: Vec<ParamVector> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = gaussian_standard(rng, dim).expect("dim >= 1");
        for q in &basis {
            let proj = q.dot(&v);
            v.axpy(-proj, q);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v.scale(1.0 / norm);
            basis.push(v);
        }
    }
    basis
}

/// Random quadratic: orthogonal basis, eigenvalues log-uniform in [mu, l]
/// with the extremes pinned so smoothness and strong convexity are exact,
/// centers c_i = c_bar + spread * g_i around a Gaussian base center.
pub fn make_quadratic(
    dim: usize,
    mu: f64,
    l: f64,
    n_samples: usize,
    center_spread: f64,
    seed: u64,
) -> Result<QuadraticProblem, DataError> {
    if !(0.0 < mu && mu <= l) {
        return Err(DataError::Invalid(format!(
            "need 0 < mu <= L, got mu={mu}, L={l}"
        )));
    }
    if dim == 0 || n_samples == 0 {
        return Err(DataError::Invalid("dim and n_samples must be >= 1".into()));
    }
    let rng = RngStream::new(seed, "quadratic");
    let form = if mu == l {
        QuadForm::Scaled(mu)
    } else {
        let mut eig_rng = rng.child("eigenvalues");
        let mut eigenvalues: Vec<f64> = (0..dim)
            .map(|i| {
                if i == 0 {
                    l
                } else if i == dim - 1 {
                    mu
                } else {
                    let t = eig_rng.uniform();
                    (mu.ln() + t * (l.ln() - mu.ln())).exp()
                }
            })
            .collect();
        // clamp against rounding drift from exp(ln .)
        for e in &mut eigenvalues {
            *e = e.clamp(mu, l);
        }
        let basis = random_orthonormal_basis(dim, &mut rng.child("basis"));
        QuadForm::Spectral { basis, eigenvalues }
    };
    let mut center_rng = rng.child("centers");
    let base = gaussian_standard(&mut center_rng, dim).expect("dim >= 1");
    let centers: Vec<ParamVector> = (0..n_samples)
        .map(|_| {
            if center_spread == 0.0 {
                base.clone()
            } else {
                let g = gaussian_standard(&mut center_rng, dim).expect("dim >= 1");
                base.plus_scaled(center_spread, &g)
            }
        })
        .collect();
    Ok(QuadraticProblem::with_centers(form, centers))
}

/// Binary logistic regression over a fixed feature matrix:
/// f(x; xi_i) = log(1 + exp(-y_i x^T z_i)) + (reg/2) ||x||^2, labels y in {-1, +1}.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    features: Vec<ParamVector>,
    labels: Vec<i8>,
    reg: f64,
}

impl LogisticProblem {
    pub fn new(features: Vec<ParamVector>, labels: Vec<i8>, reg: f64) -> Self {
        assert_eq!(features.len(), labels.len());
        assert!(!features.is_empty());
        assert!(labels.iter().all(|&y| y == 1 || y == -1));
        assert!(reg >= 0.0);
        LogisticProblem {
            features,
            labels,
            reg,
        }
    }

    pub fn label(&self, id: usize) -> i8 {
        self.labels[id]
    }
}

/// log(1 + exp(t)) without overflow.
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// 1 / (1 + exp(-t))
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Problem for LogisticProblem {
    fn dim(&self) -> usize {
        self.features[0].dim()
    }

    fn n_samples(&self) -> usize {
        self.features.len()
    }

    fn eval_one(&self, x: &ParamVector, sample_id: usize) -> f64 {
        let margin = self.labels[sample_id] as f64 * x.dot(&self.features[sample_id]);
        log1p_exp(-margin) + 0.5 * self.reg * x.dot(x)
    }

    fn grad_one(&self, x: &ParamVector, sample_id: usize) -> ParamVector {
        let y = self.labels[sample_id] as f64;
        let margin = y * x.dot(&self.features[sample_id]);
        let coeff = -y * sigmoid(-margin);
        let mut g = self.features[sample_id].scaled(coeff);
        g.axpy(self.reg, x);
        g
    }

    fn correct(&self, x: &ParamVector, sample_id: usize) -> Option<bool> {
        let score = x.dot(&self.features[sample_id]);
        let predicted: i8 = if score >= 0.0 { 1 } else { -1 };
        Some(predicted == self.labels[sample_id])
    }
}

/// Distribution shift applied to the public subset only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShiftKind {
    None,
    /// Shift every public feature vector by `magnitude` along a fixed
    /// seed-derived unit direction.
    MeanShift { magnitude: f64 },
    /// Resample public labels with class ratio 1:ratio (positive:negative).
    /// ratio = 0 leaves a single class on purpose.
    ClassImbalance { ratio: f64 },
}

/// Counts and shift knob for a private/public/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_private: usize,
    pub n_public: usize,
    pub n_test: usize,
    pub shift: ShiftKind,
    pub seed: u64,
}

impl SplitSpec {
    /// The paper-style regime: public set sized as a fraction (default 4%)
    /// of the private set.
    pub fn with_public_fraction(
        n_private: usize,
        fraction: f64,
        n_test: usize,
        shift: ShiftKind,
        seed: u64,
    ) -> Self {
        SplitSpec {
            n_private,
            n_public: ((n_private as f64) * fraction).round() as usize,
            n_test,
            shift,
            seed,
        }
    }
}

/// Disjoint index sets into one shared sample pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub private: Vec<usize>,
    pub public: Vec<usize>,
    pub test: Vec<usize>,
}

/// Two Gaussian class clouds with the requested shift applied only to the
/// public subset. Returns the problem plus disjoint id sets.
///
/// `condition` >= 1 controls feature anisotropy: coordinate scales fall
/// geometrically from 1 to 1/condition, and the class offset lives on the
/// smallest-scale 30% of coordinates in proportion to their scale (total
/// margin SNR 1.5, Bayes accuracy ~93%). Low curvature along exactly the
/// informative coordinates makes gradient information valuable: methods
/// that only probe the full space need many more iterations than methods
/// told where to look. condition = 1 is the isotropic cloud with the offset
/// along a random direction.
pub fn make_logistic_split(
    dim: usize,
    reg: f64,
    condition: f64,
    split: &SplitSpec,
) -> Result<(LogisticProblem, SplitIndices), DataError> {
    if dim == 0 {
        return Err(DataError::Invalid("dim must be >= 1".into()));
    }
    if condition < 1.0 {
        return Err(DataError::Invalid(format!(
            "condition must be >= 1, got {condition}"
        )));
    }
    if split.n_private == 0 || split.n_public == 0 {
        return Err(DataError::Invalid(
            "n_private and n_public must be >= 1".into(),
        ));
    }
    let total = split.n_private + split.n_public + split.n_test;
    let rng = RngStream::new(split.seed, "logistic");
    let snr = 1.5;
    let (scales, offset) = if condition == 1.0 {
        let mut dir_rng = rng.child("class-direction");
        let mut class_dir = gaussian_standard(&mut dir_rng, dim).expect("dim >= 1");
        class_dir.scale(snr / class_dir.norm());
        (None, class_dir)
    } else {
        let scales: Vec<f64> = (0..dim)
            .map(|i| {
                let t = if dim > 1 { i as f64 / (dim - 1) as f64 } else { 0.0 };
                (-t * condition.ln()).exp()
            })
            .collect();
        let signal_coords = ((dim as f64) * 0.3).ceil() as usize;
        let first_signal = dim - signal_coords;
        let per_coord = snr / (signal_coords as f64).sqrt();
        let offset = ParamVector::new(
            scales
                .iter()
                .enumerate()
                .map(|(i, s)| if i >= first_signal { per_coord * s } else { 0.0 })
                .collect(),
        );
        (Some(scales), offset)
    };

    let mut sample_rng = rng.child("samples");
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let draw = |label: i8, rng: &mut RngStream| -> ParamVector {
        let mut noise = gaussian_standard(rng, dim).expect("dim >= 1");
        if let Some(scales) = &scales {
            for (v, s) in (0..dim).zip(scales) {
                noise[v] *= s;
            }
        }
        noise.plus_scaled(label as f64, &offset)
    };
    for _ in 0..total {
        let label: i8 = if sample_rng.uniform() < 0.5 { 1 } else { -1 };
        features.push(draw(label, &mut sample_rng));
        labels.push(label);
    }

    let private: Vec<usize> = (0..split.n_private).collect();
    let public: Vec<usize> = (split.n_private..split.n_private + split.n_public).collect();
    let test: Vec<usize> = (split.n_private + split.n_public..total).collect();

    match split.shift {
        ShiftKind::None => {}
        ShiftKind::MeanShift { magnitude } => {
            let mut shift_rng = rng.child("shift-direction");
            let mut shift_dir = gaussian_standard(&mut shift_rng, dim).expect("dim >= 1");
            shift_dir.scale(1.0 / shift_dir.norm());
            for &id in &public {
                features[id] = features[id].plus_scaled(magnitude, &shift_dir);
            }
        }
        ShiftKind::ClassImbalance { ratio } => {
            if !(0.0..=1.0).contains(&ratio) {
                return Err(DataError::Invalid(format!(
                    "class imbalance ratio must be in [0, 1], got {ratio}"
                )));
            }
            // redraw public samples with P(label = +1) = 1 / (1 + ratio)
            let p_positive = 1.0 / (1.0 + ratio);
            let mut imb_rng = rng.child("imbalance");
            for &id in &public {
                let label: i8 = if imb_rng.uniform() < p_positive { 1 } else { -1 };
                features[id] = draw(label, &mut imb_rng);
                labels[id] = label;
            }
        }
    }

    let intentional_single_class = matches!(split.shift, ShiftKind::ClassImbalance { ratio } if ratio == 0.0);
    let first = labels[public[0]];
    if !intentional_single_class && public.iter().all(|&id| labels[id] == first) {
        return Err(DataError::SingleClassPublic);
    }

    Ok((
        LogisticProblem::new(features, labels, reg),
        SplitIndices {
            private,
            public,
            test,
        },
    ))
}

/// Load a tabular dataset: comma-separated reals per row, final column an
/// integer label in {0, 1}. Rows with non-finite entries are rejected.
pub fn load_csv_dataset(
    path: &std::path::Path,
    has_header: bool,
    reg: f64,
) -> Result<LogisticProblem, DataError> {
    let text = std::fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        if has_header && line_no == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row = line_no + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(DataError::Csv {
                row,
                reason: "need at least one feature and a label".into(),
            });
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(DataError::Csv {
                    row,
                    reason: format!("expected {w} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        let mut values = Vec::with_capacity(fields.len() - 1);
        for f in &fields[..fields.len() - 1] {
            let v: f64 = f.trim().parse().map_err(|e| DataError::Csv {
                row,
                reason: format!("bad number {f:?}: {e}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Csv {
                    row,
                    reason: format!("non-finite entry {v}"),
                });
            }
            values.push(v);
        }
        let label_field = fields[fields.len() - 1].trim();
        let label: i64 = label_field.parse().map_err(|e| DataError::Csv {
            row,
            reason: format!("bad label {label_field:?}: {e}"),
        })?;
        let label: i8 = match label {
            0 => -1,
            1 => 1,
            other => {
                return Err(DataError::Csv {
                    row,
                    reason: format!("label must be 0 or 1, got {other}"),
                })
            }
        };
        features.push(ParamVector::new(values));
        labels.push(label);
    }
    if features.is_empty() {
        return Err(DataError::Csv {
            row: 0,
            reason: "no data rows".into(),
        });
    }
    Ok(LogisticProblem::new(features, labels, reg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::gamma_similarity;
    use crate::problem::{gradient_consistency, mean_gradient};

    #[test]
    fn identity_quadratic_gradient_is_exact() {
        let p = make_quadratic(6, 1.0, 1.0, 4, 0.7, 3).unwrap();
        let mut rng = RngStream::new(8, "probe");
        let x = gaussian_standard(&mut rng, 6).unwrap();
        for id in 0..4 {
            let want = x.sub(&p.centers()[id]);
            let got = p.grad_one(&x, id);
            assert_eq!(got.as_slice(), want.as_slice());
        }
        assert_eq!(p.smoothness(), Some(1.0));
    }

    #[test]
    fn zero_spread_means_zero_gradient_variance() {
        let p = make_quadratic(5, 0.5, 2.0, 10, 0.0, 4).unwrap();
        let mut rng = RngStream::new(9, "probe");
        let x = gaussian_standard(&mut rng, 5).unwrap();
        let full = mean_gradient(&p, &x, &(0..10).collect::<Vec<_>>());
        for id in 0..10 {
            assert!(p.grad_one(&x, id).sub(&full).norm() <= 1e-12);
        }
    }

    #[test]
    fn spectrum_spans_mu_to_l_exactly() {
        let p = make_quadratic(10, 0.3, 4.0, 2, 0.1, 5).unwrap();
        assert_eq!(p.form().max_eigenvalue(), 4.0);
        assert_eq!(p.form().min_eigenvalue(), 0.3);
        assert_eq!(p.smoothness(), Some(4.0));
    }

    #[test]
    fn quadratic_gradient_variance_matches_enumeration_oracle() {
        // E||grad f(x; xi) - grad f(x)||^2 ~ spread^2 tr(A^2); the enumeration
        // over all samples is the oracle, the analytic value the cross-check
        let dim = 10;
        let spread = 0.5;
        let n = 4000;
        let p = make_quadratic(dim, 0.5, 2.0, n, spread, 6).unwrap();
        let mut rng = RngStream::new(10, "probe");
        let x = gaussian_standard(&mut rng, dim).unwrap();
        let ids: Vec<usize> = (0..n).collect();
        let full = mean_gradient(&p, &x, &ids);
        let enumerated: f64 = ids
            .iter()
            .map(|&i| p.grad_one(&x, i).sub(&full).norm().powi(2))
            .sum::<f64>()
            / n as f64;
        let trace_a2 = match p.form() {
            QuadForm::Spectral { eigenvalues, .. } => {
                eigenvalues.iter().map(|e| e * e).sum::<f64>()
            }
            QuadForm::Scaled(c) => c * c * dim as f64,
        };
        let analytic = spread * spread * trace_a2;
        assert!(
            (enumerated - analytic).abs() <= 0.10 * analytic,
            "enumerated {enumerated} vs analytic {analytic}"
        );
    }

    #[test]
    fn gradients_match_finite_differences() {
        let quad = make_quadratic(7, 0.4, 3.0, 5, 0.5, 11).unwrap();
        let mut rng = RngStream::new(12, "fd");
        assert!(gradient_consistency(&quad, 10, 1e-5, &mut rng) <= 1e-5);

        let split = SplitSpec {
            n_private: 30,
            n_public: 10,
            n_test: 10,
            shift: ShiftKind::None,
            seed: 13,
        };
        let (logistic, _) = make_logistic_split(6, 1e-3, 1.0, &split).unwrap();
        let mut rng = RngStream::new(14, "fd");
        assert!(gradient_consistency(&logistic, 10, 1e-5, &mut rng) <= 1e-5);
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let split = SplitSpec::with_public_fraction(500, 0.04, 100, ShiftKind::None, 20);
        assert_eq!(split.n_public, 20);
        let (p, idx) = make_logistic_split(4, 0.0, 1.0, &split).unwrap();
        assert_eq!(idx.private.len(), 500);
        assert_eq!(idx.public.len(), 20);
        assert_eq!(idx.test.len(), 100);
        assert_eq!(p.n_samples(), 620);
        let mut all: Vec<usize> = idx
            .private
            .iter()
            .chain(&idx.public)
            .chain(&idx.test)
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 620);
    }

    #[test]
    fn full_imbalance_gives_single_class_public() {
        let split = SplitSpec {
            n_private: 100,
            n_public: 30,
            n_test: 10,
            shift: ShiftKind::ClassImbalance { ratio: 0.0 },
            seed: 21,
        };
        let (p, idx) = make_logistic_split(4, 0.0, 1.0, &split).unwrap();
        assert!(idx.public.iter().all(|&id| p.label(id) == 1));
    }

    #[test]
    fn mean_shift_raises_gamma_over_no_shift() {
        let base = SplitSpec {
            n_private: 400,
            n_public: 100,
            n_test: 50,
            shift: ShiftKind::None,
            seed: 22,
        };
        let shifted = SplitSpec {
            shift: ShiftKind::MeanShift { magnitude: 1.0 },
            ..base
        };
        let (p0, idx0) = make_logistic_split(8, 0.0, 1.0, &base).unwrap();
        let (p1, idx1) = make_logistic_split(8, 0.0, 1.0, &shifted).unwrap();
        let mut rng = RngStream::new(23, "trajectory");
        let trajectory: Vec<ParamVector> = (0..5)
            .map(|_| gaussian_standard(&mut rng, 8).unwrap())
            .collect();
        let g0 = gamma_similarity(&p0, &trajectory, &idx0.private, &idx0.public);
        let g1 = gamma_similarity(&p1, &trajectory, &idx1.private, &idx1.public);
        assert!(
            g0.gamma < g1.gamma,
            "gamma none {} vs mean_shift {}",
            g0.gamma,
            g1.gamma
        );
    }

    #[test]
    fn logistic_and_quadratic_are_convex_on_probes() {
        let quad = make_quadratic(5, 0.5, 2.0, 3, 0.3, 30).unwrap();
        let split = SplitSpec {
            n_private: 40,
            n_public: 10,
            n_test: 5,
            shift: ShiftKind::None,
            seed: 31,
        };
        let (logistic, _) = make_logistic_split(5, 1e-2, 1.0, &split).unwrap();
        let mut rng = RngStream::new(32, "convexity");
        for problem in [&quad as &dyn Problem, &logistic as &dyn Problem] {
            for _ in 0..50 {
                let x = gaussian_standard(&mut rng, 5).unwrap();
                let y = gaussian_standard(&mut rng, 5).unwrap();
                let theta = rng.uniform();
                let id = rng.below(problem.n_samples());
                let mid = x.scaled(theta).plus_scaled(1.0 - theta, &y);
                let lhs = problem.eval_one(&mid, id);
                let rhs =
                    theta * problem.eval_one(&x, id) + (1.0 - theta) * problem.eval_one(&y, id);
                assert!(lhs <= rhs + 1e-10, "convexity violated: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn csv_loader_round_trip_and_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::write(&good, "a,b,label\n0.5,-1.25,1\n2.0,3.5,0\n").unwrap();
        let p = load_csv_dataset(&good, true, 0.0).unwrap();
        assert_eq!(p.n_samples(), 2);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.label(0), 1);
        assert_eq!(p.label(1), -1);

        let bad_label = dir.path().join("bad_label.csv");
        std::fs::write(&bad_label, "0.5,1.0,2\n").unwrap();
        assert!(load_csv_dataset(&bad_label, false, 0.0).is_err());

        let non_finite = dir.path().join("nan.csv");
        std::fs::write(&non_finite, "0.5,NaN,1\n").unwrap();
        assert!(load_csv_dataset(&non_finite, false, 0.0).is_err());

        let ragged = dir.path().join("ragged.csv");
        std::fs::write(&ragged, "0.5,1.0,1\n0.5,1\n").unwrap();
        assert!(load_csv_dataset(&ragged, false, 0.0).is_err());
    }
}
