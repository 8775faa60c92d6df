//! Bayesian predictive inference for sparse Gaussian sequence models under the
//! Horseshoe prior.
//!
//! Layers, bottom up: [`specfun`] (quadrature and the confluent hypergeometric
//! kernels), [`model`] (problem types and calibrations), [`horseshoe`] (the
//! univariate prior at fixed τ), [`predictive`] (fixed-τ predictive densities and
//! KL risks), [`hierarchical`] (posterior of τ and the Monte Carlo risk
//! estimator), [`transforms`] (wavelet and FPCA ingestion) and [`scoring`]
//! (pairwise verification and group tests).

pub mod error;
pub mod hierarchical;
pub mod horseshoe;
pub mod model;
pub mod predictive;
pub mod rng;
pub mod samples;
pub mod scoring;
pub mod specfun;
pub mod transforms;

pub use error::{Error, Result};
