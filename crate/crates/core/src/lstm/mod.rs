//! Single-layer LSTM forecaster with a scalar dense head, trained by
//! backpropagation through time.

pub mod backward;
pub mod cell;
pub mod checkpoint;
pub mod forward;
pub mod gradcheck;
pub mod params;

pub use backward::{backward, batch_gradient, sgd_step, LossKind};
pub use cell::{forward_step, CellState, GateCache};
pub use forward::{evaluate, forward_sequence, forward_trace, predict, SequenceTrace};
pub use params::{Gate, GradientSet, ModelParams, DEFAULT_HIDDEN};
