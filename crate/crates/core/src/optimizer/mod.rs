//! Latency minimization over transmit powers and CPU frequencies: two-block
//! successive convex approximation with a log-barrier inner solver, the
//! single-block baselines, and an exhaustive grid oracle.
//!
//! The optimizer works in `f64` throughout; barrier methods need the
//! headroom.

pub mod barrier;
pub mod blocks;
pub mod config;
pub mod decision;
pub mod grid;
pub mod sca;
pub mod surrogate;

pub use blocks::{solve_leaf_block, solve_relay_block};
pub use config::SolverConfig;
pub use decision::{max_violation, objective, DecisionVector, NodeDecision, RouteDecision};
pub use grid::{grid_search_oracle, GridResult, GRID_BUDGET};
pub use sca::{initialize_feasible, run_alternating_sca, run_baseline, run_sca_from, Baseline, Blocks, ScaState};
pub use surrogate::{convexified_bilinear, convexified_rate_lower};
