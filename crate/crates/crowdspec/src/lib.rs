//! Crowdsourced binary labeling under worker-task specialization.
//!
//! Tasks and workers carry latent types; a worker's chance of answering a
//! task correctly depends only on the two types through a reliability
//! matrix. The crate provides:
//!
//! - the generative model, its assortativity diagnostics, and every
//!   closed-form error exponent and sample-complexity bound
//!   ([`model`]);
//! - majority voting, weighted majority voting, and the oracle ML
//!   estimator ([`estimators`]);
//! - worker clustering by semidefinite programming with k-medoids
//!   rounding and spectral parameter tuning ([`sdpcluster`]);
//! - the end-to-end two-stage inference pipeline and the sequential
//!   subset-selection baseline ([`pipeline`]);
//! - clustering/label/type-matching error metrics ([`metrics`]);
//! - a seeded, reproducible experiment harness with a config-file driven
//!   sweep runner and real-data ingestion ([`experiment`]).
//!
//! Runnable walkthroughs for each capability live in `examples/`; the
//! `crowdspec` binary wraps the harness as subcommands.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sdpcluster;

pub use error::{Error, Result};
