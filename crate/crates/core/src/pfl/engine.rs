use rayon::prelude::*;

use crate::data::{ClientPartition, SlidingWindowDataset};
use crate::error::{arg_err, Result};
use crate::lstm::{evaluate, ModelParams};
use crate::rng::{derive_seed, rng_from, stream};
use crate::scalar::Scalar;

use super::aggregate::{aggregate_fedavg, aggregate_weighted};
use super::config::PflConfig;
use super::local::local_train;
use super::probe::probe_learning_rates;

/// How each client picks its local learning rate every round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LrPolicy<T> {
    /// Probe every configured candidate on the client's probe slice.
    Probe,
    /// Plain federated learning at a fixed rate.
    Fixed(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundMetrics<T> {
    /// 1-based round index.
    pub round: usize,
    pub client_ids: Vec<usize>,
    pub alpha_best: Vec<T>,
    /// Per client, probe loss of every candidate (empty under a fixed rate).
    pub probe_losses: Vec<Vec<T>>,
    pub train_loss: Vec<T>,
    pub global_mae: T,
    pub global_rmse: T,
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub rounds: Vec<RoundMetrics<T>>,
    pub params: ModelParams<T>,
}

impl<T: Scalar> RunOutput<T> {
    pub fn final_mae(&self) -> Option<T> {
        self.rounds.last().map(|r| r.global_mae)
    }

    pub fn final_rmse(&self) -> Option<T> {
        self.rounds.last().map(|r| r.global_rmse)
    }
}

struct ClientUpdate<T> {
    params: ModelParams<T>,
    alpha: T,
    probe_losses: Vec<T>,
    train_loss: T,
}

/// The shared initial global model for a configuration.
pub fn initial_params<T: Scalar>(cfg: &PflConfig<T>) -> ModelParams<T> {
    ModelParams::init_uniform(cfg.hidden_size, 1, &mut rng_from(cfg.seed, &[stream::INIT]))
}

/// One client's work for one round. Randomness depends only on
/// `(seed, client_id, round)`.
fn client_round<T: Scalar>(
    global: &ModelParams<T>,
    client: &ClientPartition<T>,
    cfg: &PflConfig<T>,
    policy: LrPolicy<T>,
    round: usize,
) -> Result<ClientUpdate<T>> {
    let opts = cfg.train_options();
    let key = [client.client_id as u64, round as u64];
    let (alpha, probe_losses) = match policy {
        LrPolicy::Probe => {
            let seed = derive_seed(cfg.seed, &key);
            let out = probe_learning_rates(global, client, &cfg.lr_candidates, cfg.probe_iters, &opts, seed)?;
            (out.best_lr, out.losses)
        }
        LrPolicy::Fixed(a) => (a, Vec::new()),
    };
    let local = local_train(global, client, alpha, cfg.local_iters, &opts, derive_seed(cfg.seed, &key))?;
    Ok(ClientUpdate { params: local.params, alpha, probe_losses, train_loss: local.mean_loss })
}

/// Broadcast, per-client probing and local training (clients run concurrently),
/// aggregation, and evaluation on `test`, for `cfg.rounds` rounds.
pub fn run_federated<T: Scalar>(
    cfg: &PflConfig<T>,
    policy: LrPolicy<T>,
    init: ModelParams<T>,
    partitions: &[ClientPartition<T>],
    test: &SlidingWindowDataset<T>,
) -> Result<RunOutput<T>> {
    cfg.validate()?;
    if partitions.len() != cfg.clients {
        return arg_err(format!("{} partitions for {} clients", partitions.len(), cfg.clients));
    }
    if let LrPolicy::Fixed(a) = policy {
        if !(a > T::zero()) {
            return arg_err(format!("fixed learning rate {a} must be positive"));
        }
    }
    let mut weights: Vec<(usize, T)> =
        partitions.iter().map(|p| (p.client_id, T::from_usize_lossy(p.train.len()))).collect();
    weights.sort_by_key(|(id, _)| *id);
    let weights: Vec<T> = weights.into_iter().map(|(_, w)| w).collect();
    let mut global = init;
    let mut rounds = Vec::with_capacity(cfg.rounds);
    for round in 1..=cfg.rounds {
        let mut updates: Vec<(usize, ClientUpdate<T>)> = partitions
            .par_iter()
            .map(|client| client_round(&global, client, cfg, policy, round).map(|u| (client.client_id, u)))
            .collect::<Result<_>>()?;
        // aggregate in client-id order whatever order the partitions came in
        updates.sort_by_key(|(id, _)| *id);
        let (ids, updates): (Vec<usize>, Vec<ClientUpdate<T>>) = updates.into_iter().unzip();
        let models: Vec<ModelParams<T>> = updates.iter().map(|u| u.params.clone()).collect();
        global =
            if cfg.weighted_aggregation { aggregate_weighted(&models, &weights)? } else { aggregate_fedavg(&models)? };
        let (global_mae, global_rmse) = evaluate(&global, test)?;
        rounds.push(RoundMetrics {
            round,
            client_ids: ids,
            alpha_best: updates.iter().map(|u| u.alpha).collect(),
            probe_losses: updates.iter().map(|u| u.probe_losses.clone()).collect(),
            train_loss: updates.iter().map(|u| u.train_loss).collect(),
            global_mae,
            global_rmse,
        });
    }
    Ok(RunOutput { rounds, params: global })
}

/// Personalized FL with per-client learning-rate probing.
pub fn run_pfl<T: Scalar>(
    cfg: &PflConfig<T>,
    partitions: &[ClientPartition<T>],
    test: &SlidingWindowDataset<T>,
) -> Result<RunOutput<T>> {
    run_federated(cfg, LrPolicy::Probe, initial_params(cfg), partitions, test)
}

/// Plain FedAvg at a fixed learning rate.
pub fn run_fl_baseline<T: Scalar>(
    cfg: &PflConfig<T>,
    lr: T,
    partitions: &[ClientPartition<T>],
    test: &SlidingWindowDataset<T>,
) -> Result<RunOutput<T>> {
    run_federated(cfg, LrPolicy::Fixed(lr), initial_params(cfg), partitions, test)
}

/// One client training alone for `cfg.rounds` rounds with probing and no
/// communication. Metrics report that client's own model on `test`.
pub fn run_standalone<T: Scalar>(
    cfg: &PflConfig<T>,
    client: &ClientPartition<T>,
    test: &SlidingWindowDataset<T>,
) -> Result<RunOutput<T>> {
    let solo = PflConfig { clients: 1, ..cfg.clone() };
    run_federated(&solo, LrPolicy::Probe, initial_params(cfg), std::slice::from_ref(client), test)
}

/// All client data pooled on one node. The node runs `J * N` iterations per
/// round at the mean client batch size, i.e. the sample budget of the whole
/// federation, with the same learning-rate probing.
pub fn run_centralized<T: Scalar>(
    cfg: &PflConfig<T>,
    partitions: &[ClientPartition<T>],
    test: &SlidingWindowDataset<T>,
) -> Result<RunOutput<T>> {
    if partitions.is_empty() {
        return arg_err("no partitions to pool");
    }
    let n = partitions.len();
    let batch = (partitions.iter().map(|p| p.batch_size).sum::<usize>() as f64 / n as f64).round() as usize;
    let pooled = ClientPartition {
        client_id: 0,
        train: SlidingWindowDataset::concat(partitions.iter().map(|p| &p.train)),
        probe: SlidingWindowDataset::concat(partitions.iter().map(|p| &p.probe)),
        batch_size: batch.max(1),
        train_range: 0..0,
        probe_range: 0..0,
    };
    let central = PflConfig { clients: 1, local_iters: cfg.local_iters * n, ..cfg.clone() };
    run_federated(&central, LrPolicy::Probe, initial_params(cfg), std::slice::from_ref(&pooled), test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_windows, partition, synthetic::sine, PartitionMode, PartitionSpec};
    use crate::pfl::local::local_train;
    use crate::pfl::probe::probe_learning_rates;

    fn small_cfg(clients: usize, rounds: usize) -> PflConfig<f64> {
        PflConfig { clients, rounds, local_iters: 3, probe_iters: 2, hidden_size: 6, seed: 17, ..PflConfig::default() }
    }

    fn parts(n: usize) -> (Vec<ClientPartition<f64>>, SlidingWindowDataset<f64>) {
        let s = sine(24 * 12, 24.0);
        let ds = make_windows(&s, 24, 1);
        let test = ds.slice(0..40);
        let spec = PartitionSpec {
            clients: n,
            mode: PartitionMode::Iid,
            sizes: None,
            batch_sizes: None,
            default_batch_size: 8,
            seed: 2,
        };
        (partition(&ds, &spec).unwrap(), test)
    }

    #[test]
    fn zero_rounds_returns_init() {
        let cfg = small_cfg(2, 0);
        let (p, t) = parts(2);
        let out = run_pfl(&cfg, &p, &t).unwrap();
        assert!(out.rounds.is_empty());
        assert_eq!(out.params, initial_params(&cfg));
    }

    #[test]
    fn partition_count_must_match() {
        let (p, t) = parts(2);
        assert!(run_pfl(&small_cfg(3, 1), &p, &t).is_err());
    }

    #[test]
    fn single_client_equals_sequential_local_training() {
        let cfg = small_cfg(1, 3);
        let (p, t) = parts(1);
        let out = run_pfl(&cfg, &p, &t).unwrap();
        let opts = cfg.train_options();
        let mut w = initial_params(&cfg);
        for round in 1..=3u64 {
            let seed = derive_seed(cfg.seed, &[0, round]);
            let probe = probe_learning_rates(&w, &p[0], &cfg.lr_candidates, cfg.probe_iters, &opts, seed).unwrap();
            w = local_train(&w, &p[0], probe.best_lr, cfg.local_iters, &opts, seed).unwrap().params;
        }
        assert_eq!(out.params, w);
    }

    #[test]
    fn single_candidate_pfl_equals_fixed_rate_fl() {
        let mut cfg = small_cfg(3, 2);
        cfg.lr_candidates = vec![0.01];
        let (p, t) = parts(3);
        let a = run_pfl(&cfg, &p, &t).unwrap();
        let b = run_fl_baseline(&cfg, 0.01, &p, &t).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn standalone_is_isolated() {
        let cfg = small_cfg(2, 2);
        let (mut p, t) = parts(2);
        let a = run_standalone(&cfg, &p[0], &t).unwrap();
        for w in &mut p[1].train.windows {
            w.target += 0.3;
        }
        let b = run_standalone(&cfg, &p[0], &t).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn client_order_does_not_matter() {
        let cfg = small_cfg(3, 2);
        let (p, t) = parts(3);
        let a = run_pfl(&cfg, &p, &t).unwrap();
        let mut rev = p.clone();
        rev.reverse();
        let b = run_pfl(&cfg, &rev, &t).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.rounds, b.rounds);
    }

    #[test]
    fn selected_rates_are_probe_minimizers() {
        let cfg = small_cfg(3, 3);
        let (p, t) = parts(3);
        let out = run_pfl(&cfg, &p, &t).unwrap();
        for r in &out.rounds {
            for (a, losses) in r.alpha_best.iter().zip(&r.probe_losses) {
                let i = cfg.lr_candidates.iter().position(|c| c == a).unwrap();
                assert!(losses.iter().all(|&l| losses[i] <= l));
            }
        }
    }
}
