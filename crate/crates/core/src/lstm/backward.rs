use rand::Rng;

use crate::data::series::Window;
use crate::error::{arg_err, Error, Result};
use crate::scalar::Scalar;

use super::forward::{forward_trace, SequenceTrace};
use super::params::{Gate, GradientSet, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LossKind {
    /// Mean absolute error; subgradient `sign(r)` with `sign(0) = 0`.
    #[default]
    Mae,
    /// Mean squared error.
    Mse,
}

impl LossKind {
    fn value_and_slope<T: Scalar>(self, prediction: T, target: T) -> (T, T) {
        let r = prediction - target;
        match self {
            LossKind::Mae => {
                let slope = if r > T::zero() {
                    T::one()
                } else if r < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                };
                (r.abs(), slope)
            }
            LossKind::Mse => (r * r, T::lit(2.0) * r),
        }
    }
}

/// Reverse-mode gradient of the mean batch loss through the dense head and
/// every LSTM step. Returns the gradient and the mean loss.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    traces: &[SequenceTrace<T>],
    targets: &[T],
    loss: LossKind,
) -> Result<(GradientSet<T>, T)> {
    if traces.is_empty() {
        return arg_err("empty batch");
    }
    if traces.len() != targets.len() {
        return arg_err(format!("{} traces but {} targets", traces.len(), targets.len()));
    }
    let hidden = params.hidden_size();
    let zdim = params.concat_size();
    for t in traces {
        let consistent = t.h_last.len() == hidden
            && t.mask.as_ref().is_none_or(|m| m.len() == hidden)
            && t.caches.iter().all(|c| c.z.len() == zdim && c.f.len() == hidden);
        if !consistent {
            return Err(Error::State("gate cache does not match parameter shapes".into()));
        }
    }

    let inv_n = T::one() / T::from_usize_lossy(traces.len());
    let mut grads = GradientSet::zeros_like(params);
    let mut total_loss = T::zero();

    let mut dh = vec![T::zero(); hidden];
    let mut dc = vec![T::zero(); hidden];
    let mut da = [vec![T::zero(); hidden], vec![T::zero(); hidden], vec![T::zero(); hidden], vec![T::zero(); hidden]];

    for (trace, &target) in traces.iter().zip(targets) {
        let (l, slope) = loss.value_and_slope(trace.prediction, target);
        total_loss += l;
        let dpred = slope * inv_n;

        // dense head
        {
            let w_y: Vec<T> = params.w_y().to_vec();
            let gw = grads.w_y_mut();
            for k in 0..hidden {
                let m = trace.mask.as_ref().map_or(T::one(), |m| m[k]);
                gw[k] += dpred * m * trace.h_last[k];
                dh[k] = dpred * w_y[k] * m;
            }
            *grads.b_y_mut() += dpred;
        }
        dc.iter_mut().for_each(|v| *v = T::zero());

        for cache in trace.caches.iter().rev() {
            for k in 0..hidden {
                let tc = cache.tanh_c[k];
                let d_o = dh[k] * tc;
                let dck = dc[k] + dh[k] * cache.o[k] * (T::one() - tc * tc);
                let d_f = dck * cache.c_prev[k];
                let d_i = dck * cache.g[k];
                let d_g = dck * cache.i[k];
                dc[k] = dck * cache.f[k];
                da[0][k] = d_f * cache.f[k] * (T::one() - cache.f[k]);
                da[1][k] = d_i * cache.i[k] * (T::one() - cache.i[k]);
                da[2][k] = d_g * (T::one() - cache.g[k] * cache.g[k]);
                da[3][k] = d_o * cache.o[k] * (T::one() - cache.o[k]);
            }

            let mut dz = vec![T::zero(); zdim];
            for (gate, a) in Gate::ALL.into_iter().zip(&da) {
                {
                    let gw = grads.w_mut(gate);
                    for r in 0..hidden {
                        let ar = a[r];
                        if ar == T::zero() {
                            continue;
                        }
                        let row = &mut gw[r * zdim..(r + 1) * zdim];
                        for (g, &z) in row.iter_mut().zip(&cache.z) {
                            *g += ar * z;
                        }
                    }
                }
                for (g, &ar) in grads.b_mut(gate).iter_mut().zip(a) {
                    *g += ar;
                }
                let w = params.w(gate);
                for r in 0..hidden {
                    let ar = a[r];
                    if ar == T::zero() {
                        continue;
                    }
                    let row = &w[r * zdim..(r + 1) * zdim];
                    for (d, &wv) in dz.iter_mut().zip(row) {
                        *d += ar * wv;
                    }
                }
            }
            dh.copy_from_slice(&dz[..hidden]);
        }
    }

    Ok((grads, total_loss * inv_n))
}

/// Train-mode forward over a batch followed by [`backward`].
pub fn batch_gradient<T: Scalar, R: Rng + ?Sized>(
    params: &ModelParams<T>,
    batch: &[&Window<T>],
    loss: LossKind,
    dropout_rate: T,
    rng: &mut R,
) -> Result<(GradientSet<T>, T)> {
    let traces =
        batch.iter().map(|w| forward_trace(params, &w.input, dropout_rate, true, rng)).collect::<Result<Vec<_>>>()?;
    let targets: Vec<T> = batch.iter().map(|w| w.target).collect();
    backward(params, &traces, &targets, loss)
}

/// `w - lr * grad`, elementwise.
pub fn sgd_step<T: Scalar>(params: &ModelParams<T>, grads: &GradientSet<T>, lr: T) -> Result<ModelParams<T>> {
    let mut next = params.clone();
    apply_sgd(&mut next, grads, lr)?;
    Ok(next)
}

pub fn apply_sgd<T: Scalar>(params: &mut ModelParams<T>, grads: &GradientSet<T>, lr: T) -> Result<()> {
    if !params.same_shape(grads) {
        return arg_err("gradient shape does not match parameters");
    }
    if lr < T::zero() || !lr.is_finite() {
        return arg_err(format!("learning rate {lr} must be finite and non-negative"));
    }
    for (w, &g) in params.as_mut_slice().iter_mut().zip(grads.as_slice()) {
        *w -= lr * g;
    }
    Ok(())
}
