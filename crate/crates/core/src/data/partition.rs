use std::ops::Range;

use rand::seq::SliceRandom;

use crate::error::{arg_err, Error, Result};
use crate::rng::{rng_from, stream};
use crate::scalar::Scalar;

use super::series::SlidingWindowDataset;

/// Probe slices never exceed this many windows.
pub const MAX_PROBE_WINDOWS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    Iid,
    NonIid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    pub clients: usize,
    pub mode: PartitionMode,
    /// Windows per client (non-IID only).
    pub sizes: Option<Vec<usize>>,
    pub batch_sizes: Option<Vec<usize>>,
    /// Used when `batch_sizes` is absent.
    pub default_batch_size: usize,
    pub seed: u64,
}

/// One smart meter's local data: a probe slice for learning-rate selection and a
/// disjoint training slice.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientPartition<T> {
    pub client_id: usize,
    pub train: SlidingWindowDataset<T>,
    pub probe: SlidingWindowDataset<T>,
    pub batch_size: usize,
    /// Window indices into the source dataset.
    pub train_range: Range<usize>,
    pub probe_range: Range<usize>,
}

impl<T: Scalar> ClientPartition<T> {
    /// Builds a partition from a share of windows, splitting off the probe slice.
    pub fn from_share(
        client_id: usize,
        dataset: &SlidingWindowDataset<T>,
        share: Range<usize>,
        batch_size: usize,
    ) -> Result<Self> {
        let len = share.len();
        if len < 2 {
            return Err(Error::Capacity { requested: 2, available: len });
        }
        let probe_len = probe_len(len);
        let probe_range = share.start..share.start + probe_len;
        let train_range = share.start + probe_len..share.end;
        Ok(ClientPartition {
            client_id,
            train: dataset.slice(train_range.clone()),
            probe: dataset.slice(probe_range.clone()),
            batch_size: batch_size.max(1),
            train_range,
            probe_range,
        })
    }
}

/// `min(64, ceil(10% of the share))`, at least one window.
pub fn probe_len(share: usize) -> usize {
    share.div_ceil(10).clamp(1, MAX_PROBE_WINDOWS)
}

/// Splits a windowed dataset across `spec.clients` smart meters.
///
/// IID: the dataset is cut into equal contiguous shares which are dealt to
/// clients in a seeded random order. Non-IID: client `n` gets `sizes[n]`
/// consecutive windows from its own time region; regions are laid out in a
/// seeded random client order.
pub fn partition<T: Scalar>(
    dataset: &SlidingWindowDataset<T>,
    spec: &PartitionSpec,
) -> Result<Vec<ClientPartition<T>>> {
    let n = spec.clients;
    if n < 1 {
        return arg_err("client count must be at least 1");
    }
    if let Some(b) = &spec.batch_sizes {
        if b.len() != n {
            return arg_err(format!("batch_sizes has {} entries, expected {n}", b.len()));
        }
        if b.contains(&0) {
            return arg_err("batch sizes must be positive");
        }
    }
    let batch = |i: usize| spec.batch_sizes.as_ref().map_or(spec.default_batch_size, |b| b[i]);
    let mut rng = rng_from(spec.seed, &[stream::PARTITION]);
    let total = dataset.len();

    let shares: Vec<Range<usize>> = match spec.mode {
        PartitionMode::Iid => {
            let base = total / n;
            let extra = total % n;
            let mut blocks = Vec::with_capacity(n);
            let mut start = 0;
            for i in 0..n {
                let len = base + usize::from(i < extra);
                blocks.push(start..start + len);
                start += len;
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            order.into_iter().map(|b| blocks[b].clone()).collect()
        }
        PartitionMode::NonIid => {
            let Some(sizes) = &spec.sizes else {
                return arg_err("non-IID partitioning requires sizes");
            };
            if sizes.len() != n {
                return arg_err(format!("sizes has {} entries, expected {n}", sizes.len()));
            }
            if spec.batch_sizes.is_none() {
                return arg_err("non-IID partitioning requires batch_sizes");
            }
            let requested: usize = sizes.iter().sum();
            if requested > total {
                return Err(Error::Capacity { requested, available: total });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut shares = vec![0..0; n];
            let mut start = 0;
            for client in order {
                shares[client] = start..start + sizes[client];
                start += sizes[client];
            }
            shares
        }
    };

    shares.into_iter().enumerate().map(|(i, share)| ClientPartition::from_share(i, dataset, share, batch(i))).collect()
}
