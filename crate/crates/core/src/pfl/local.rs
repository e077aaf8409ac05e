use rand::seq::SliceRandom;

use crate::data::series::{SlidingWindowDataset, Window};
use crate::data::ClientPartition;
use crate::error::{arg_err, Error, Result};
use crate::lstm::backward::apply_sgd;
use crate::lstm::{batch_gradient, ModelParams};
use crate::rng::{rng_from, stream, SimRng};
use crate::scalar::Scalar;

use super::config::TrainOptions;

/// Epoch-wise shuffled mini-batches; reshuffles whenever an epoch is exhausted.
pub(crate) struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl BatchSampler {
    pub(crate) fn new(len: usize, batch: usize) -> Self {
        BatchSampler { order: (0..len).collect(), pos: len, batch: batch.clamp(1, len.max(1)) }
    }

    pub(crate) fn next_batch(&mut self, rng: &mut SimRng) -> &[usize] {
        if self.pos + self.batch > self.order.len() {
            self.order.shuffle(rng);
            self.pos = 0;
        }
        let start = self.pos;
        self.pos += self.batch;
        &self.order[start..self.pos]
    }
}

/// Runs `iters` SGD steps on mini-batches of `data`. Returns the mean
/// pre-update batch loss.
pub(crate) fn sgd_iterations<T: Scalar>(
    params: &mut ModelParams<T>,
    data: &SlidingWindowDataset<T>,
    batch_size: usize,
    lr: T,
    iters: usize,
    opts: &TrainOptions<T>,
    rng: &mut SimRng,
) -> Result<T> {
    let mut sampler = BatchSampler::new(data.len(), batch_size);
    let mut total = T::zero();
    for _ in 0..iters {
        let batch: Vec<&Window<T>> = sampler.next_batch(rng).iter().map(|&i| &data.windows[i]).collect();
        let (mut grads, loss) = batch_gradient(params, &batch, opts.loss, opts.dropout, rng)?;
        if let Some(max) = opts.clip_norm {
            grads.clip_global_norm(max);
        }
        apply_sgd(params, &grads, lr)?;
        total += loss;
    }
    Ok(total / T::from_usize_lossy(iters.max(1)))
}

#[derive(Clone, Debug)]
pub struct LocalOutcome<T> {
    pub params: ModelParams<T>,
    /// Mean mini-batch loss over the local iterations.
    pub mean_loss: T,
}

/// `J` personalized SGD iterations on the client's training slice at its
/// selected learning rate.
pub fn local_train<T: Scalar>(
    params: &ModelParams<T>,
    client: &ClientPartition<T>,
    lr: T,
    iters: usize,
    opts: &TrainOptions<T>,
    seed: u64,
) -> Result<LocalOutcome<T>> {
    if !(lr > T::zero()) {
        return arg_err(format!("learning rate {lr} must be positive"));
    }
    if client.train.is_empty() {
        return Err(Error::State(format!("client {} has no training windows", client.client_id)));
    }
    let mut rng = rng_from(seed, &[stream::TRAIN]);
    let mut p = params.clone();
    let mean_loss = sgd_iterations(&mut p, &client.train, client.batch_size, lr, iters, opts, &mut rng)?;
    Ok(LocalOutcome { params: p, mean_loss })
}
