use crate::error::{arg_err, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Initial barrier weight; the centering objective is `f/μ - Σ ln(-g)`.
    pub barrier_mu0: f64,
    /// Factor applied to μ after each centering stage.
    pub barrier_shrink: f64,
    /// Stop the barrier method once the duality-gap proxy `m·μ` drops below this.
    pub inner_tol: f64,
    /// Relative objective change that ends the SCA loop.
    pub outer_tol: f64,
    pub max_sca_iters: usize,
    /// Newton steps allowed per convex subproblem.
    pub max_inner_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            barrier_mu0: 1.0,
            barrier_shrink: 0.2,
            inner_tol: 1e-10,
            outer_tol: 1e-4,
            max_sca_iters: 20,
            max_inner_iters: 2000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.barrier_shrink > 0.0 && self.barrier_shrink < 1.0) {
            return arg_err(format!("barrier_shrink {} outside (0, 1)", self.barrier_shrink));
        }
        if !(self.barrier_mu0 > 0.0 && self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return arg_err("barrier_mu0 and tolerances must be positive");
        }
        if self.max_sca_iters == 0 || self.max_inner_iters == 0 {
            return arg_err("iteration limits must be positive");
        }
        Ok(())
    }
}
