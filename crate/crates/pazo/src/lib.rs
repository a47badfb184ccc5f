//! Differentially private zeroth-order optimization with public-data
//! assistance.
//!
//! The crate bundles:
//! - the PAZO family of optimizers (mixing, public-subspace, and selection
//!   variants) plus DPZero and DP-SGD baselines and non-private references,
//! - the clipped two-point function-difference estimators they share,
//! - a Renyi-DP accountant for the Poisson-subsampled Gaussian mechanism
//!   with sigma calibration,
//! - desk-scale synthetic problems with a public/private distribution-shift
//!   knob, gamma-similarity measurement, and
//! - a sweep harness with deterministic JSONL/CSV outputs behind the `pazo`
//!   command line tool.

pub mod config;
pub mod metrics;
pub mod optimizers;
pub mod privacy;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod sampling;
pub mod sweep;
pub mod vector;

pub use metrics::{evaluate, gamma_similarity, EvalResult, GammaReport};
pub use privacy::{accountant_epsilon, calibrate_sigma, PrivacySpec};
pub use problem::Problem;
pub use rng::RngStream;
pub use vector::ParamVector;
