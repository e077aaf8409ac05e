use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

use super::params::{Gate, ModelParams};

#[derive(Clone, Debug, PartialEq)]
pub struct CellState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> CellState<T> {
    pub fn zeros(hidden: usize) -> Self {
        CellState { h: vec![T::zero(); hidden], c: vec![T::zero(); hidden] }
    }
}

/// Intermediates of one step, retained for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct GateCache<T> {
    /// `[h_prev; x]`
    pub z: Vec<T>,
    pub f: Vec<T>,
    pub i: Vec<T>,
    /// Candidate cell state.
    pub g: Vec<T>,
    pub o: Vec<T>,
    pub c_prev: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
}

/// `W z + b` for one gate.
fn affine<T: Scalar>(params: &ModelParams<T>, gate: Gate, z: &[T]) -> Vec<T> {
    let w = params.w(gate);
    let cols = z.len();
    params
        .b(gate)
        .iter()
        .enumerate()
        .map(|(r, &b)| {
            let row = &w[r * cols..(r + 1) * cols];
            row.iter().zip(z).fold(b, |acc, (&wv, &zv)| acc + wv * zv)
        })
        .collect()
}

/// One LSTM step:
///
/// ```text
/// f = σ(W_f [h; x] + b_f)     i = σ(W_i [h; x] + b_i)
/// g = tanh(W_c [h; x] + b_c)  o = σ(W_o [h; x] + b_o)
/// c' = f ⊙ c + i ⊙ g          h' = o ⊙ tanh(c')
/// ```
pub fn forward_step<T: Scalar>(
    params: &ModelParams<T>,
    state: &CellState<T>,
    x: &[T],
) -> Result<(CellState<T>, GateCache<T>)> {
    let hidden = params.hidden_size();
    if state.h.len() != hidden || state.c.len() != hidden || x.len() != params.input_size() {
        return Err(Error::Argument(format!(
            "state/input shape ({}, {}, {}) does not match params ({hidden}, {hidden}, {})",
            state.h.len(),
            state.c.len(),
            x.len(),
            params.input_size()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("LSTM input".into()));
    }

    let mut z = Vec::with_capacity(params.concat_size());
    z.extend_from_slice(&state.h);
    z.extend_from_slice(x);

    let f: Vec<T> = affine(params, Gate::Forget, &z).into_iter().map(sigmoid).collect();
    let i: Vec<T> = affine(params, Gate::Input, &z).into_iter().map(sigmoid).collect();
    let g: Vec<T> = affine(params, Gate::Candidate, &z).into_iter().map(T::tanh).collect();
    let o: Vec<T> = affine(params, Gate::Output, &z).into_iter().map(sigmoid).collect();

    let c: Vec<T> = (0..hidden).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<T> = o.iter().zip(&tanh_c).map(|(&ov, &tc)| ov * tc).collect();

    let cache = GateCache { z, f, i, g, o, c_prev: state.c.clone(), c: c.clone(), tanh_c };
    Ok((CellState { h, c }, cache))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    #[test]
    fn zero_params_give_half_gates() {
        let p = ModelParams::<f64>::zeros(4, 1);
        let (s, cache) = forward_step(&p, &CellState::zeros(4), &[0.7]).unwrap();
        for k in 0..4 {
            assert_eq!(cache.f[k], 0.5);
            assert_eq!(cache.i[k], 0.5);
            assert_eq!(cache.o[k], 0.5);
            assert_eq!(cache.g[k], 0.0);
        }
        assert_eq!(s.c, vec![0.0; 4]);
        assert_eq!(s.h, vec![0.0; 4]);
    }

    #[test]
    fn rejects_bad_input() {
        let p = ModelParams::<f64>::zeros(2, 1);
        assert!(matches!(forward_step(&p, &CellState::zeros(2), &[f64::NAN]), Err(Error::Numeric(_))));
        assert!(matches!(forward_step(&p, &CellState::zeros(3), &[0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn gate_ranges() {
        let mut rng = rng_from(11, &[]);
        for _ in 0..50 {
            let p = ModelParams::<f64>::init_uniform(6, 1, &mut rng);
            let mut s = CellState::zeros(6);
            s.h.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            s.c.iter_mut().for_each(|v| *v = rng.random_range(-3.0..3.0));
            let (next, cache) = forward_step(&p, &s, &[rng.random_range(-2.0..2.0)]).unwrap();
            for k in 0..6 {
                assert!(cache.f[k] > 0.0 && cache.f[k] < 1.0);
                assert!(cache.i[k] > 0.0 && cache.i[k] < 1.0);
                assert!(cache.o[k] > 0.0 && cache.o[k] < 1.0);
                assert!(cache.g[k] > -1.0 && cache.g[k] < 1.0);
                assert!(next.h[k].abs() < 1.0);
            }
        }
    }
}
