use crate::error::{arg_err, Result};
use crate::lstm::{LossKind, DEFAULT_HIDDEN};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct PflConfig<T> {
    /// N
    pub clients: usize,
    /// K
    pub rounds: usize,
    /// J
    pub local_iters: usize,
    /// P
    pub probe_iters: usize,
    pub lr_candidates: Vec<T>,
    pub seed: u64,
    pub hidden_size: usize,
    pub dropout: T,
    pub loss: LossKind,
    /// Global L2 gradient-norm cap applied before every SGD step.
    pub clip_norm: Option<T>,
    /// Weight client models by training-set size instead of the plain mean.
    pub weighted_aggregation: bool,
}

impl<T: Scalar> Default for PflConfig<T> {
    fn default() -> Self {
        PflConfig {
            clients: 5,
            rounds: 100,
            local_iters: 10,
            probe_iters: 10,
            lr_candidates: vec![T::lit(0.05), T::lit(0.001), T::lit(0.0001)],
            seed: 0,
            hidden_size: DEFAULT_HIDDEN,
            dropout: T::lit(0.2),
            loss: LossKind::Mae,
            clip_norm: Some(T::lit(5.0)),
            weighted_aggregation: false,
        }
    }
}

impl<T: Scalar> PflConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.clients < 1 {
            return arg_err("client count must be at least 1");
        }
        if self.local_iters < 1 || self.probe_iters < 1 {
            return arg_err("local and probe iteration counts must be at least 1");
        }
        if self.lr_candidates.is_empty() {
            return arg_err("learning-rate candidate list is empty");
        }
        if self.lr_candidates.iter().any(|&a| !(a > T::zero() && a.is_finite())) {
            return arg_err("learning-rate candidates must be positive and finite");
        }
        if !(self.dropout >= T::zero() && self.dropout < T::one()) {
            return arg_err("dropout must lie in [0, 1)");
        }
        if self.hidden_size == 0 {
            return arg_err("hidden size must be positive");
        }
        Ok(())
    }

    pub fn train_options(&self) -> TrainOptions<T> {
        TrainOptions { dropout: self.dropout, loss: self.loss, clip_norm: self.clip_norm }
    }
}

/// Per-step training knobs shared by probing and local training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions<T> {
    pub dropout: T,
    pub loss: LossKind,
    pub clip_norm: Option<T>,
}
