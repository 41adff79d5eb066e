//! Collapsed Bayesian inference for ReLU networks: a box-uniform posterior
//! over a few weights is integrated exactly with WMI, the rest are sampled.

pub mod bnn;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod mlp;
pub mod posterior;

pub use error::{CiberError, Result};
