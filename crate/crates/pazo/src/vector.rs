//! Dense parameter vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

/// Dense real vector of model parameters x in R^d.
///
/// Also used for perturbation directions and gradients. Immutable sharing is
/// safe; mutation happens through the in-place arithmetic helpers below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    /// Construct with a finiteness check on every entry.
    pub fn checked(values: Vec<f64>) -> Result<Self, VectorError> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(VectorError::NonFinite { index: i, value: v });
            }
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// self += scale * other
    pub fn axpy(&mut self, scale: f64, other: &ParamVector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    /// self *= scale
    pub fn scale(&mut self, scale: f64) {
        for a in &mut self.0 {
            *a *= scale;
        }
    }

    pub fn scaled(&self, scale: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|a| a * scale).collect())
    }

    /// self + scale * other
    pub fn plus_scaled(&self, scale: f64, other: &ParamVector) -> ParamVector {
        debug_assert_eq!(self.dim(), other.dim());
        ParamVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        self.plus_scaled(-1.0, other)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector(values)
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for ParamVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
