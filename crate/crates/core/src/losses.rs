//! Forecast error metrics.

use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

fn check<T>(y: &[T], y_hat: &[T]) -> Result<()> {
    if y.is_empty() {
        return arg_err("empty input");
    }
    if y.len() != y_hat.len() {
        return arg_err(format!("length mismatch: {} vs {}", y.len(), y_hat.len()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check(y, y_hat)?;
    let sum: T = y.iter().zip(y_hat).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(sum / T::from_usize_lossy(y.len()))
}

/// Root mean squared error.
pub fn rmse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check(y, y_hat)?;
    let sum: T = y.iter().zip(y_hat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sum / T::from_usize_lossy(y.len())).sqrt())
}
