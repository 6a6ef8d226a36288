//! Ranking losses and ranking metrics.
//!
//! * [`metrics`]: exact AUROC (pairwise and rank-sum) and one-vs-rest macro AUROC.
//! * [`losses`]: logistic-smoothed AUROC losses, cross-entropy, gradient checking.
//! * [`nn`]: a small MLP, stratified minibatches and SGD training.
//! * [`harness`]: repeated random splits comparing loss arms.
//! * [`stats`]: confidence intervals and Student's t-test.
//! * [`data`]: synthetic datasets and CSV input.
//! * [`config`]: JSON configuration for comparison runs.

pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use metrics::PredictionBatch;
