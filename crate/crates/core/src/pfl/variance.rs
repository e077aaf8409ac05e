use rand::seq::index::sample;

use crate::data::series::Window;
use crate::data::ClientPartition;
use crate::error::{arg_err, Error, Result};
use crate::lstm::{batch_gradient, GradientSet, LossKind, ModelParams};
use crate::rng::{rng_from, stream};
use crate::scalar::Scalar;

/// Monte-Carlo estimate of mini-batch gradient noise at a fixed model.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceEstimate<T> {
    /// Per client, mean of `‖g_n(w, χ) - ∇F_n(w)‖²`.
    pub per_client: Vec<T>,
    /// Largest entry of `per_client`.
    pub max_client: T,
    /// Mean over draws of `‖(1/N) Σ_n (g_n - ∇F_n)‖²`.
    pub averaged: T,
    pub draws: usize,
}

fn full_gradient<T: Scalar>(
    params: &ModelParams<T>,
    client: &ClientPartition<T>,
    loss: LossKind,
) -> Result<GradientSet<T>> {
    let batch: Vec<&Window<T>> = client.train.windows.iter().collect();
    // Dropout is off, so the rng is never consulted.
    let mut rng = rng_from(0, &[]);
    Ok(batch_gradient(params, &batch, loss, T::zero(), &mut rng)?.0)
}

/// Draws `draws` independent mini-batches per client (without replacement,
/// at each client's batch size) and measures their deviation from the
/// client's full-batch gradient. Dropout is disabled so that the only
/// randomness is the sample selection.
pub fn estimate_sgd_variance<T: Scalar>(
    params: &ModelParams<T>,
    clients: &[ClientPartition<T>],
    draws: usize,
    loss: LossKind,
    seed: u64,
) -> Result<VarianceEstimate<T>> {
    if draws < 2 {
        return arg_err("variance estimation needs at least two draws");
    }
    if clients.is_empty() {
        return arg_err("variance estimation needs at least one client");
    }
    if let Some(c) = clients.iter().find(|c| c.train.is_empty()) {
        return Err(Error::State(format!("client {} has no training windows", c.client_id)));
    }
    let full = clients.iter().map(|c| full_gradient(params, c, loss)).collect::<Result<Vec<_>>>()?;
    let inv_n = T::one() / T::from_usize_lossy(clients.len());
    let mut per_client = vec![T::zero(); clients.len()];
    let mut averaged = T::zero();
    let mut rng = rng_from(seed, &[stream::VARIANCE]);
    let mut no_dropout = rng_from(0, &[]);

    for _ in 0..draws {
        let mut mean_err = vec![T::zero(); params.len()];
        for (n, client) in clients.iter().enumerate() {
            let len = client.train.len();
            let idx = sample(&mut rng, len, client.batch_size.min(len));
            let batch: Vec<&Window<T>> = idx.iter().map(|i| &client.train.windows[i]).collect();
            let (g, _) = batch_gradient(params, &batch, loss, T::zero(), &mut no_dropout)?;
            let mut sq = T::zero();
            for ((m, &gi), &fi) in mean_err.iter_mut().zip(g.as_slice()).zip(full[n].as_slice()) {
                let e = gi - fi;
                sq += e * e;
                *m += e * inv_n;
            }
            per_client[n] += sq;
        }
        averaged += mean_err.iter().map(|&e| e * e).sum::<T>();
    }
    let d = T::from_usize_lossy(draws);
    per_client.iter_mut().for_each(|v| *v /= d);
    let max_client = per_client.iter().copied().fold(T::zero(), T::max);
    Ok(VarianceEstimate { per_client, max_client, averaged: averaged / d, draws })
}
