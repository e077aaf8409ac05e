use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

/// Constants of the smooth, strongly convex convergence analysis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremConstants<T> {
    /// L
    pub smoothness: T,
    /// μ
    pub strong_convexity: T,
    /// σ_r, bound on the per-client stochastic-gradient deviation.
    pub noise_bound: T,
    /// B
    pub gradient_bound: T,
    /// F(w_1) - F*
    pub initial_gap: T,
}

impl<T: Scalar> TheoremConstants<T> {
    pub fn validate(&self) -> Result<()> {
        let c = self;
        if !(c.strong_convexity > T::zero()) {
            return arg_err("strong-convexity constant must be positive");
        }
        if c.smoothness < c.strong_convexity {
            return arg_err("smoothness constant must be at least the strong-convexity constant");
        }
        if c.noise_bound < T::zero() || c.gradient_bound < T::zero() || c.initial_gap < T::zero() {
            return arg_err("noise bound, gradient bound and initial gap must be non-negative");
        }
        Ok(())
    }
}

/// Upper bound on `E[F(w_K)] - F*` for every `K` in `1..=rounds`:
///
/// ```text
/// L(1 + L/μ)/μ · gap / (K + L/μ)
///   + 16L / (30 μ² (K + L/μ)) · Σ_{k≤K} [ 4 J B² (α_k + 1)/α_k² + σ_r² / N² ]
/// ```
pub fn theorem_bound<T: Scalar>(
    c: &TheoremConstants<T>,
    rounds: usize,
    local_iters: usize,
    clients: usize,
    alphas: &[T],
) -> Result<Vec<T>> {
    c.validate()?;
    if alphas.len() < rounds {
        return arg_err(format!("{} learning rates for {rounds} rounds", alphas.len()));
    }
    if alphas[..rounds].iter().any(|&a| !(a > T::zero())) {
        return arg_err("learning rates must be positive");
    }
    if clients == 0 {
        return arg_err("client count must be positive");
    }
    let (l, mu) = (c.smoothness, c.strong_convexity);
    let kappa = l / mu;
    let n = T::from_usize_lossy(clients);
    let j = T::from_usize_lossy(local_iters);
    let b2 = c.gradient_bound * c.gradient_bound;
    let noise = c.noise_bound * c.noise_bound / (n * n);

    let mut sum = T::zero();
    let mut out = Vec::with_capacity(rounds);
    for (k, &a) in alphas[..rounds].iter().enumerate() {
        sum += T::lit(4.0) * j * b2 * (a + T::one()) / (a * a) + noise;
        let denom = T::from_usize_lossy(k + 1) + kappa;
        let first = l * (T::one() + kappa) / mu * c.initial_gap / denom;
        let second = T::lit(16.0) * l / (T::lit(30.0) * mu * mu * denom) * sum;
        out.push(first + second);
    }
    Ok(out)
}
