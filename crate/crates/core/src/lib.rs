//! Personalized federated load forecasting over multi-hop smart-metering
//! networks, and latency minimization for that network.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiments use.

// `!(x > 0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod losses;
pub mod lstm;
pub mod network;
pub mod optimizer;
pub mod pfl;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ModelParams = lstm::ModelParams<f64>;
pub type GradientSet = lstm::GradientSet<f64>;
pub type Dataset = data::SlidingWindowDataset<f64>;
pub type ClientPartition = data::ClientPartition<f64>;
