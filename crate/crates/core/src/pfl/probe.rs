use crate::data::ClientPartition;
use crate::error::{arg_err, Error, Result};
use crate::losses::mae;
use crate::lstm::{predict, LossKind, ModelParams};
use crate::rng::{rng_from, stream};
use crate::scalar::Scalar;

use super::config::TrainOptions;
use super::local::sgd_iterations;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOutcome<T> {
    pub best_lr: T,
    pub best_index: usize,
    /// Probe-set loss reached by each candidate, in candidate order. Divergent
    /// candidates record `+inf`.
    pub losses: Vec<T>,
}

/// Eval-mode loss of `params` over the probe slice.
pub(crate) fn probe_loss<T: Scalar>(params: &ModelParams<T>, client: &ClientPartition<T>, loss: LossKind) -> Result<T> {
    let pred = predict(params, &client.probe)?;
    let targets = client.probe.targets();
    let value = match loss {
        LossKind::Mae => mae(&targets, &pred)?,
        LossKind::Mse => {
            let n = T::from_usize_lossy(targets.len());
            targets.iter().zip(&pred).map(|(&y, &p)| (y - p) * (y - p)).sum::<T>() / n
        }
    };
    Ok(if value.is_finite() { value } else { T::infinity() })
}

/// Tries every candidate learning rate on a throwaway copy of the global model
/// (`P` SGD steps on the probe slice, then the probe loss) and picks the
/// minimizer. Ties go to the earliest candidate. Every candidate sees the same
/// mini-batch sequence.
pub fn probe_learning_rates<T: Scalar>(
    global: &ModelParams<T>,
    client: &ClientPartition<T>,
    candidates: &[T],
    probe_iters: usize,
    opts: &TrainOptions<T>,
    seed: u64,
) -> Result<ProbeOutcome<T>> {
    if candidates.is_empty() {
        return arg_err("learning-rate candidate list is empty");
    }
    if client.probe.is_empty() {
        return Err(Error::State(format!("client {} has an empty probe slice", client.client_id)));
    }
    select_learning_rate(candidates, |lr| {
        let mut trial = global.clone();
        let mut rng = rng_from(seed, &[stream::PROBE]);
        sgd_iterations(&mut trial, &client.probe, client.batch_size, lr, probe_iters, opts, &mut rng)?;
        probe_loss(&trial, client, opts.loss)
    })
}

/// Evaluates `trial_loss` for every candidate and returns the argmin, earliest
/// candidate on ties. Non-finite losses count as `+inf`.
pub fn select_learning_rate<T: Scalar>(
    candidates: &[T],
    mut trial_loss: impl FnMut(T) -> Result<T>,
) -> Result<ProbeOutcome<T>> {
    if candidates.is_empty() {
        return arg_err("learning-rate candidate list is empty");
    }
    let mut losses = Vec::with_capacity(candidates.len());
    for &lr in candidates {
        let l = trial_loss(lr)?;
        losses.push(if l.is_finite() { l } else { T::infinity() });
    }
    let mut best_index = 0;
    for (i, &l) in losses.iter().enumerate().skip(1) {
        if l < losses[best_index] {
            best_index = i;
        }
    }
    Ok(ProbeOutcome { best_lr: candidates[best_index], best_index, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_windows, synthetic::sine};

    fn setup() -> (ModelParams<f64>, ClientPartition<f64>, TrainOptions<f64>) {
        let ds = make_windows(&sine(24 * 10, 24.0), 24, 1);
        let client = ClientPartition::from_share(0, &ds, 0..ds.len(), 8).unwrap();
        let p = ModelParams::init_uniform(8, 1, &mut rng_from(1, &[]));
        (p, client, TrainOptions { dropout: 0.2, loss: LossKind::Mae, clip_norm: Some(5.0) })
    }

    #[test]
    fn single_candidate() {
        let (p, c, o) = setup();
        let out = probe_learning_rates(&p, &c, &[0.01], 3, &o, 5).unwrap();
        assert_eq!(out.best_lr, 0.01);
        assert_eq!(out.losses.len(), 1);
    }

    #[test]
    fn ties_go_to_first() {
        let (p, c, o) = setup();
        let out = probe_learning_rates(&p, &c, &[0.01, 0.01, 0.01], 3, &o, 5).unwrap();
        assert_eq!(out.best_index, 0);
        assert!(out.losses.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn quadratic_surrogate_rejects_divergent_rate() {
        // f(w) = c w^2, gradient step w <- (1 - 2 a c) w diverges once a c > 1
        let c = 30.0;
        let run = |a: f64| -> Result<f64> {
            let mut w = 1.0f64;
            for _ in 0..10 {
                w -= a * 2.0 * c * w;
            }
            Ok(c * w * w)
        };
        assert!(run(0.05).unwrap() > 1e5);
        let out = select_learning_rate(&[0.05, 0.001, 0.0001], run).unwrap();
        assert_eq!(out.best_lr, 0.001);
        let nan = select_learning_rate(&[0.1, 0.2], |a| Ok(if a < 0.15 { f64::NAN } else { 1.0 })).unwrap();
        assert_eq!(nan.best_index, 1);
    }

    #[test]
    fn empty_candidates() {
        let (p, c, o) = setup();
        assert!(matches!(probe_learning_rates(&p, &c, &[], 3, &o, 5), Err(Error::Argument(_))));
    }

    #[test]
    fn global_params_untouched_and_selection_minimal() {
        let (p, c, o) = setup();
        let before = p.clone();
        let out = probe_learning_rates(&p, &c, &[0.05, 0.001, 0.0001], 10, &o, 5).unwrap();
        assert_eq!(p, before);
        assert!(out.losses.iter().all(|&l| out.losses[out.best_index] <= l));
    }
}
