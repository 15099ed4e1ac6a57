//! Latent-threshold common-correlation model: likelihood analysis,
//! estimators, and simulation experiments.
//!
//! A latent exchangeable Gaussian-factor-style sequence
//! X_i = sqrt(1-a*) Y_i + sqrt(a*) Y is observed only through threshold
//! indicators (binary or trinary). This crate provides:
//!
//! - the five standardized noise/factor laws used throughout ([`dist`]),
//! - seeded simulation of the latent layer and its discretizations ([`model`]),
//! - the marginal likelihood of the binary sequence in the correlation
//!   parameter, its large-n limits, and the pairwise Kullback-Leibler
//!   divergence of the observation law ([`likelihood`]),
//! - moment and maximum-likelihood estimators of the common correlation
//!   ([`estimators`]),
//! - reproducible Monte Carlo experiment drivers ([`experiments`]),
//! - a daily-stock-panel pipeline producing standardized return windows and
//!   per-day correlation estimates ([`stocks`]).
//!
//! Numerical foundations (tail-stable special functions and adaptive
//! log-domain quadrature) live in [`special`] and [`quad`].

pub mod dist;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod likelihood;
pub mod model;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stocks;

pub use dist::StandardizedDistribution;
pub use error::{CoreError, Result};
pub use model::{BinarySample, LatentSample, ModelConfig, Thresholds, TrinarySample};
