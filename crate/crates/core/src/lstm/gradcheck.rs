//! Central finite-difference check of the analytic BPTT gradient.

use rand::Rng;

use crate::data::series::{Window, WINDOW_LEN};
use crate::error::Result;
use crate::rng::rng_from;
use crate::scalar::Scalar;

use super::backward::{batch_gradient, LossKind};
use super::forward::forward_sequence;
use super::params::ModelParams;

/// Denominator floor for the relative error, so entries whose gradient is
/// numerically zero are compared absolutely at this scale.
pub const RELATIVE_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub worst_parameter: String,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn mean_loss<T: Scalar>(params: &ModelParams<T>, batch: &[&Window<T>], loss: LossKind) -> Result<f64> {
    let mut rng = rng_from(0, &[]);
    let mut total = 0.0;
    for w in batch {
        let r = (forward_sequence(params, &w.input, T::zero(), false, &mut rng)? - w.target).as_f64();
        total += match loss {
            LossKind::Mae => r.abs(),
            LossKind::Mse => r * r,
        };
    }
    Ok(total / batch.len() as f64)
}

/// A seeded model and batch of random windows. Under the absolute loss each
/// target sits 0.3 away from the prediction so no residual is near the kink.
pub fn random_case(
    seed: u64,
    hidden: usize,
    batch: usize,
    loss: LossKind,
) -> Result<(ModelParams<f64>, Vec<Window<f64>>)> {
    let mut rng = rng_from(seed, &[]);
    let params = ModelParams::init_uniform(hidden, 1, &mut rng);
    let mut windows: Vec<Window<f64>> = (0..batch)
        .map(|_| Window {
            input: (0..WINDOW_LEN).map(|_| rng.random_range(0.0..1.0)).collect(),
            target: rng.random_range(0.0..1.0),
        })
        .collect();
    if loss == LossKind::Mae {
        for (i, w) in windows.iter_mut().enumerate() {
            let y = forward_sequence(&params, &w.input, 0.0, false, &mut rng_from(0, &[]))?;
            w.target = y + if (seed + i as u64).is_multiple_of(2) { 0.3 } else { -0.3 };
        }
    }
    Ok((params, windows))
}

/// Compares every parameter's analytic gradient (dropout disabled) with
/// `(loss(w + h) - loss(w - h)) / 2h`.
pub fn check_gradients<T: Scalar>(
    params: &ModelParams<T>,
    batch: &[&Window<T>],
    loss: LossKind,
    step: f64,
) -> Result<GradCheckReport> {
    let (grads, _) = batch_gradient(params, batch, loss, T::zero(), &mut rng_from(0, &[]))?;
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        worst_parameter: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        checked: params.len(),
    };
    for idx in 0..params.len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + T::lit(step);
        let up = mean_loss(&probe, batch, loss)?;
        probe.as_mut_slice()[idx] = orig - T::lit(step);
        let down = mean_loss(&probe, batch, loss)?;
        probe.as_mut_slice()[idx] = orig;

        let numeric = (up - down) / (2.0 * step);
        let analytic = grads.as_slice()[idx].as_f64();
        let err = relative_error(analytic, numeric);
        if err > report.max_relative_error || !err.is_finite() {
            report.max_relative_error = err;
            report.worst_index = idx;
            report.analytic = analytic;
            report.numeric = numeric;
        }
    }
    report.worst_parameter = params.describe_index(report.worst_index);
    Ok(report)
}
