//! Experiment driver: configuration, dataset and topology construction, and
//! CSV metrics for every training and optimization mode.

// `!(x > 0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csv;
pub mod error;
pub mod run;

pub use config::{parse_config, serialize_config, ExperimentConfig, Mode};
pub use error::{CliError, ConfigError};
