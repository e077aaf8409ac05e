use crate::error::{arg_err, Result};
use crate::lstm::ModelParams;
use crate::scalar::Scalar;

fn check_shapes<T: Scalar>(models: &[ModelParams<T>]) -> Result<()> {
    let Some(first) = models.first() else {
        return arg_err("no client models to aggregate");
    };
    if models.iter().any(|m| !m.same_shape(first)) {
        return arg_err("client models have mismatched shapes");
    }
    Ok(())
}

/// Unweighted elementwise mean of the client models.
///
/// Computed as `w_0 + mean(w_n - w_0)` so identical inputs come back bit-exact.
pub fn aggregate_fedavg<T: Scalar>(models: &[ModelParams<T>]) -> Result<ModelParams<T>> {
    check_shapes(models)?;
    let n = T::from_usize_lossy(models.len());
    let mut out = models[0].clone();
    let base = models[0].as_slice();
    for (k, slot) in out.as_mut_slice().iter_mut().enumerate() {
        let shift: T = models[1..].iter().map(|m| m.as_slice()[k] - base[k]).sum();
        *slot = base[k] + shift / n;
    }
    Ok(out)
}

/// Mean weighted by `weights` (e.g. training-set sizes).
pub fn aggregate_weighted<T: Scalar>(models: &[ModelParams<T>], weights: &[T]) -> Result<ModelParams<T>> {
    check_shapes(models)?;
    if weights.len() != models.len() {
        return arg_err("one weight per client model is required");
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) || weights.iter().any(|&w| w < T::zero()) {
        return arg_err("weights must be non-negative with a positive sum");
    }
    let mut out = models[0].clone();
    let base = models[0].as_slice();
    for (k, slot) in out.as_mut_slice().iter_mut().enumerate() {
        let shift: T = models.iter().zip(weights).map(|(m, &w)| w * (m.as_slice()[k] - base[k])).sum();
        *slot = base[k] + shift / total;
    }
    Ok(out)
}
