//! Personalized federated learning: per-client learning-rate probing, local
//! SGD, federated averaging, baselines, and convergence-bound tooling.

pub mod aggregate;
pub mod bound;
pub mod config;
pub mod engine;
pub mod local;
pub mod probe;
pub mod toy;
pub mod variance;

pub use aggregate::{aggregate_fedavg, aggregate_weighted};
pub use bound::{theorem_bound, TheoremConstants};
pub use config::{PflConfig, TrainOptions};
pub use engine::{
    initial_params, run_centralized, run_federated, run_fl_baseline, run_pfl, run_standalone, LrPolicy, RoundMetrics,
    RunOutput,
};
pub use local::{local_train, LocalOutcome};
pub use probe::{probe_learning_rates, ProbeOutcome};
pub use variance::{estimate_sgd_variance, VarianceEstimate};
