use rand::Rng;

use crate::data::series::{SlidingWindowDataset, WINDOW_LEN};
use crate::error::{arg_err, Result};
use crate::losses::{mae, rmse};
use crate::scalar::Scalar;

use super::cell::{forward_step, CellState, GateCache};
use super::params::ModelParams;

/// Everything the backward pass needs from one window's forward pass.
#[derive(Clone, Debug)]
pub struct SequenceTrace<T> {
    pub caches: Vec<GateCache<T>>,
    /// Inverted-dropout multipliers applied to the final hidden state; `None` in eval mode.
    pub mask: Option<Vec<T>>,
    pub h_last: Vec<T>,
    pub prediction: T,
}

/// Runs the window from a zero state and applies the dense head.
///
/// In train mode each unit of the final hidden state is dropped with
/// probability `dropout_rate` and survivors are scaled by `1 / (1 - rate)`.
pub fn forward_trace<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    window: &[T],
    dropout_rate: T,
    train_mode: bool,
    rng: &mut R,
) -> Result<SequenceTrace<T>> {
    if window.len() != WINDOW_LEN * params.input_size() {
        return arg_err(format!("window has {} values, expected {}", window.len(), WINDOW_LEN * params.input_size()));
    }
    if !(dropout_rate >= T::zero() && dropout_rate < T::one()) {
        return arg_err(format!("dropout rate {dropout_rate} outside [0, 1)"));
    }
    let hidden = params.hidden_size();
    let mut state = CellState::zeros(hidden);
    let mut caches = Vec::with_capacity(WINDOW_LEN);
    for x in window.chunks(params.input_size()) {
        let (next, cache) = forward_step(params, &state, x)?;
        caches.push(cache);
        state = next;
    }

    let mask = (train_mode && dropout_rate > T::zero()).then(|| {
        let keep = T::one() - dropout_rate;
        let p_drop = dropout_rate.as_f64();
        (0..hidden).map(|_| if rng.random::<f64>() < p_drop { T::zero() } else { T::one() / keep }).collect::<Vec<T>>()
    });

    let w_y = params.w_y();
    let prediction = match &mask {
        Some(m) => (0..hidden).fold(params.b_y(), |acc, k| acc + w_y[k] * m[k] * state.h[k]),
        None => (0..hidden).fold(params.b_y(), |acc, k| acc + w_y[k] * state.h[k]),
    };
    Ok(SequenceTrace { caches, mask, h_last: state.h, prediction })
}

pub fn forward_sequence<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    window: &[T],
    dropout_rate: T,
    train_mode: bool,
    rng: &mut R,
) -> Result<T> {
    forward_trace(params, window, dropout_rate, train_mode, rng).map(|t| t.prediction)
}

/// Eval-mode predictions for every window.
pub fn predict<T: Scalar>(params: &ModelParams<T>, data: &SlidingWindowDataset<T>) -> Result<Vec<T>> {
    // eval mode never draws from the generator
    let mut no_rng = crate::rng::rng_from(0, &[]);
    data.windows.iter().map(|w| forward_sequence(params, &w.input, T::zero(), false, &mut no_rng)).collect()
}

/// `(MAE, RMSE)` of eval-mode predictions.
pub fn evaluate<T: Scalar>(params: &ModelParams<T>, data: &SlidingWindowDataset<T>) -> Result<(T, T)> {
    let pred = predict(params, data)?;
    let targets = data.targets();
    Ok((mae(&targets, &pred)?, rmse(&targets, &pred)?))
}
