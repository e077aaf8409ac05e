//! Log-barrier interior-point method for small smooth convex programs,
//! `min f(x) s.t. g_j(x) ≤ 0`, with damped Newton centering.

use crate::error::{arg_err, Error, Result};

/// Value, gradient and row-major Hessian of a twice-differentiable function.
#[derive(Clone, Debug, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

pub trait BarrierProblem {
    fn dim(&self) -> usize;
    fn objective(&self, x: &[f64]) -> Eval;
    /// Every entry must be `≤ 0` at a feasible point.
    fn constraints(&self, x: &[f64]) -> Vec<Eval>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierSettings {
    pub mu0: f64,
    pub shrink: f64,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub newton_iters: usize,
    /// Final `m·μ`.
    pub gap: f64,
}

/// Centering stops when half the squared Newton decrement falls below this.
const NEWTON_TOL: f64 = 1e-10;

fn strictly_feasible<P: BarrierProblem + ?Sized>(problem: &P, x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite()) && problem.constraints(x).iter().all(|g| g.value < 0.0)
}

/// `φ(y) - φ(x)` for `φ = t·f - Σ ln(-g)`, summed term by term so that the
/// difference keeps its precision when `t·f` is large.
fn barrier_change<P: BarrierProblem + ?Sized>(problem: &P, x: &[f64], y: &[f64], t: f64) -> f64 {
    let cy = problem.constraints(y);
    if cy.iter().any(|g| !(g.value < 0.0)) || y.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let cx = problem.constraints(x);
    let df = t * (problem.objective(y).value - problem.objective(x).value);
    df - cy.iter().zip(&cx).map(|(a, b)| (a.value / b.value).ln()).sum::<f64>()
}

/// Gradient and Hessian of `t·f - Σ ln(-g)`.
fn barrier_derivatives<P: BarrierProblem + ?Sized>(problem: &P, x: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = problem.objective(x);
    let mut grad: Vec<f64> = f.grad.iter().map(|v| t * v).collect();
    let mut hess: Vec<f64> = f.hess.iter().map(|v| t * v).collect();
    for g in problem.constraints(x) {
        let inv = -1.0 / g.value;
        for i in 0..n {
            grad[i] += inv * g.grad[i];
            for j in 0..n {
                hess[i * n + j] += inv * g.hess[i * n + j] + inv * inv * g.grad[i] * g.grad[j];
            }
        }
    }
    (grad, hess)
}

/// Solves `A x = b` for symmetric positive-definite `A` via Cholesky.
pub fn cholesky_solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    for i in (0..n).rev() {
        y[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    Some(y)
}

/// Newton direction, regularizing the Hessian if it is not numerically positive definite.
fn newton_direction(hess: &[f64], grad: &[f64]) -> Vec<f64> {
    let n = grad.len();
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    let scale = (0..n).map(|i| hess[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 0.0;
    loop {
        let mut h = hess.to_vec();
        (0..n).for_each(|i| h[i * n + i] += reg);
        if let Some(d) = cholesky_solve(&h, &neg) {
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        reg = if reg == 0.0 { 1e-12 * scale } else { reg * 10.0 };
        if reg > 1e12 * scale {
            return neg;
        }
    }
}

pub fn solve_barrier<P: BarrierProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    settings: &BarrierSettings,
) -> Result<BarrierSolution> {
    if x0.len() != problem.dim() {
        return arg_err(format!("start has {} entries, problem has {}", x0.len(), problem.dim()));
    }
    if !strictly_feasible(problem, x0) {
        return arg_err("barrier start is not strictly feasible");
    }
    let m = problem.constraints(x0).len() as f64;
    let mut x = x0.to_vec();
    let mut t = 1.0 / settings.mu0;
    let mut iters = 0;
    loop {
        loop {
            let (grad, hess) = barrier_derivatives(problem, &x, t);
            let d = newton_direction(&hess, &grad);
            let slope: f64 = grad.iter().zip(&d).map(|(g, d)| g * d).sum();
            if -slope / 2.0 <= NEWTON_TOL {
                break;
            }
            iters += 1;
            if iters > settings.max_iters {
                return Err(Error::Solver {
                    iterations: iters - 1,
                    message: format!("barrier centering did not converge at μ = {:e}", 1.0 / t),
                    last_iterate: x,
                });
            }
            let mut step = 1.0;
            let mut trial: Vec<f64>;
            loop {
                trial = x.iter().zip(&d).map(|(x, d)| x + step * d).collect();
                if barrier_change(problem, &x, &trial, t) <= 0.25 * step * slope {
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 || trial == x {
                // No representable progress: centred to machine precision.
                break;
            }
            x = trial;
        }
        if m / t < settings.tol {
            break;
        }
        t /= settings.shrink;
    }
    Ok(BarrierSolution { objective: problem.objective(&x).value, x, newton_iters: iters, gap: m / t })
}
