//! Deterministic, labeled randomness streams.
//!
//! Every source of randomness in a run (perturbations, privacy noise, batch
//! sampling, data generation) owns its own stream. Streams are derived from a
//! 64-bit seed and a label path by hashing, so distinct labels give
//! independent streams and replaying a run with the same seed reproduces every
//! draw bit for bit. A stream is single-owner: it is never shared, only split
//! into labeled children.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::vector::ParamVector;

#[derive(Debug, Error)]
pub enum RngError {
    #[error("requested zero draws")]
    EmptyRequest,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    key: [u8; 32],
    label: String,
    rng: ChaCha8Rng,
}

fn derive_key(parent: &[u8], label: &str) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(parent);
    hasher.update([0x1f]);
    hasher.update(label.as_bytes());
    hasher.finalize().into()
}

impl RngStream {
    pub fn new(seed: u64, label: &str) -> Self {
        let key = derive_key(&seed.to_le_bytes(), label);
        RngStream {
            key,
            label: label.to_string(),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Split off an independent child stream. The child's draws do not depend
    /// on how far this stream has advanced.
    pub fn child(&self, label: &str) -> Self {
        let key = derive_key(&self.key, label);
        RngStream {
            key,
            label: format!("{}/{}", self.label, label),
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in [0, bound).
    pub fn below(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }
}

/// n i.i.d. standard normal draws, advancing the stream deterministically.
pub fn gaussian_standard(rng: &mut RngStream, n: usize) -> Result<ParamVector, RngError> {
    if n == 0 {
        return Err(RngError::EmptyRequest);
    }
    Ok(ParamVector::new(
        (0..n).map(|_| rng.standard_normal()).collect(),
    ))
}

/// Poisson sampling: include each id independently with probability `rate`.
pub fn poisson_sample(ids: &[usize], rate: f64, rng: &mut RngStream) -> Vec<usize> {
    ids.iter()
        .copied()
        .filter(|_| rng.uniform() < rate)
        .collect()
}

/// k ids drawn uniformly without replacement (partial Fisher-Yates).
pub fn sample_without_replacement(ids: &[usize], k: usize, rng: &mut RngStream) -> Vec<usize> {
    assert!(k <= ids.len(), "cannot draw {k} from {}", ids.len());
    let mut pool: Vec<usize> = ids.to_vec();
    for i in 0..k {
        let j = i + rng.below(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}
