use std::ops::{Deref, DerefMut};

use rand::Rng;

use crate::error::{arg_err, Result};
use crate::scalar::Scalar;

pub const DEFAULT_HIDDEN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Forget,
    Input,
    Candidate,
    Output,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];

    fn slot(self) -> usize {
        self as usize
    }
}

/// All LSTM and dense-head weights, stored flat in checkpoint order:
/// `W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o, W_y, b_y`.
///
/// Gate matrices are `hidden x (hidden + input)`, row-major, acting on the
/// concatenation `[h_prev; x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    hidden: usize,
    input: usize,
    data: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn parameter_count(hidden: usize, input: usize) -> usize {
        4 * (hidden * (hidden + input) + hidden) + hidden + 1
    }

    pub fn zeros(hidden: usize, input: usize) -> Self {
        ModelParams { hidden, input, data: vec![T::zero(); Self::parameter_count(hidden, input)] }
    }

    /// Uniform in `[-1/sqrt(hidden), 1/sqrt(hidden)]` for every entry.
    pub fn init_uniform<R: Rng + ?Sized>(hidden: usize, input: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(hidden, input);
        for v in &mut p.data {
            *v = T::lit(rng.random_range(-bound..=bound));
        }
        p
    }

    pub fn from_flat(hidden: usize, input: usize, data: Vec<T>) -> Result<Self> {
        let expected = Self::parameter_count(hidden, input);
        if data.len() != expected {
            return arg_err(format!("expected {expected} parameters, got {}", data.len()));
        }
        Ok(ModelParams { hidden, input, data })
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    /// Width of the concatenated `[h; x]` vector.
    pub fn concat_size(&self) -> usize {
        self.hidden + self.input
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.hidden == other.hidden && self.input == other.input
    }

    fn gate_block(&self) -> usize {
        self.hidden * self.concat_size() + self.hidden
    }

    fn w_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let start = gate.slot() * self.gate_block();
        start..start + self.hidden * self.concat_size()
    }

    fn b_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let start = gate.slot() * self.gate_block() + self.hidden * self.concat_size();
        start..start + self.hidden
    }

    fn head_start(&self) -> usize {
        4 * self.gate_block()
    }

    pub fn w(&self, gate: Gate) -> &[T] {
        &self.data[self.w_range(gate)]
    }

    pub fn b(&self, gate: Gate) -> &[T] {
        &self.data[self.b_range(gate)]
    }

    pub fn w_mut(&mut self, gate: Gate) -> &mut [T] {
        let r = self.w_range(gate);
        &mut self.data[r]
    }

    pub fn b_mut(&mut self, gate: Gate) -> &mut [T] {
        let r = self.b_range(gate);
        &mut self.data[r]
    }

    pub fn w_y(&self) -> &[T] {
        let s = self.head_start();
        &self.data[s..s + self.hidden]
    }

    pub fn w_y_mut(&mut self) -> &mut [T] {
        let s = self.head_start();
        &mut self.data[s..s + self.hidden]
    }

    pub fn b_y(&self) -> T {
        self.data[self.data.len() - 1]
    }

    pub fn b_y_mut(&mut self) -> &mut T {
        let last = self.data.len() - 1;
        &mut self.data[last]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Human-readable location of a flat index, e.g. `W_c[3,7]`.
    pub fn describe_index(&self, idx: usize) -> String {
        let z = self.concat_size();
        for (gate, name) in Gate::ALL.into_iter().zip(["f", "i", "c", "o"]) {
            let w = self.w_range(gate);
            if w.contains(&idx) {
                let k = idx - w.start;
                return format!("W_{name}[{},{}]", k / z, k % z);
            }
            let b = self.b_range(gate);
            if b.contains(&idx) {
                return format!("b_{name}[{}]", idx - b.start);
            }
        }
        if idx + 1 == self.data.len() {
            "b_y".to_string()
        } else {
            format!("W_y[{}]", idx - self.head_start())
        }
    }
}

/// Gradient of a scalar loss with respect to every [`ModelParams`] entry, same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet<T>(ModelParams<T>);

impl<T: Scalar> GradientSet<T> {
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        GradientSet(ModelParams::zeros(params.hidden_size(), params.input_size()))
    }

    pub fn from_params(p: ModelParams<T>) -> Self {
        GradientSet(p)
    }

    pub fn l2_norm(&self) -> T {
        self.0.data.iter().map(|&g| g * g).sum::<T>().sqrt()
    }

    pub fn scale(&mut self, c: T) {
        for g in &mut self.0.data {
            *g *= c;
        }
    }

    /// Rescales so the global L2 norm does not exceed `max_norm`. Returns the pre-clip norm.
    pub fn clip_global_norm(&mut self, max_norm: T) -> T {
        let norm = self.l2_norm();
        if norm > max_norm && norm > T::zero() {
            self.scale(max_norm / norm);
        }
        norm
    }
}

impl<T> Deref for GradientSet<T> {
    type Target = ModelParams<T>;
    fn deref(&self) -> &ModelParams<T> {
        &self.0
    }
}

impl<T> DerefMut for GradientSet<T> {
    fn deref_mut(&mut self) -> &mut ModelParams<T> {
        &mut self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_covers_every_entry_once() {
        let mut p = ModelParams::<f64>::zeros(3, 2);
        assert_eq!(p.len(), 4 * (3 * 5 + 3) + 3 + 1);
        for g in Gate::ALL {
            p.w_mut(g).iter_mut().for_each(|v| *v += 1.0);
            p.b_mut(g).iter_mut().for_each(|v| *v += 1.0);
        }
        p.w_y_mut().iter_mut().for_each(|v| *v += 1.0);
        *p.b_y_mut() += 1.0;
        assert!(p.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn default_model_size() {
        assert_eq!(ModelParams::<f64>::parameter_count(DEFAULT_HIDDEN, 1), 10_451);
    }

    #[test]
    fn clipping() {
        let p = ModelParams::<f64>::from_flat(1, 1, vec![3.0; 4 * 3 + 2]).unwrap();
        let mut g = GradientSet::from_params(p);
        let before = g.clip_global_norm(5.0);
        assert!((before - (9.0f64 * 14.0).sqrt()).abs() < 1e-12);
        assert!((g.l2_norm() - 5.0).abs() < 1e-12);
    }
}
