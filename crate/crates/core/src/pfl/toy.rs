//! Federated least squares in two dimensions: the convex setting where the
//! convergence bound's constants can be measured exactly.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::{rng_from, stream, SimRng};

pub type Vec2 = [f64; 2];

#[derive(Clone, Debug)]
pub struct LsqClient {
    pub features: Vec<Vec2>,
    pub targets: Vec<f64>,
}

impl LsqClient {
    fn residual(&self, i: usize, w: &Vec2) -> f64 {
        let a = self.features[i];
        a[0] * w[0] + a[1] * w[1] - self.targets[i]
    }

    /// `(1/2m) Σ (aᵀw - b)²`
    pub fn objective(&self, w: &Vec2) -> f64 {
        let m = self.targets.len() as f64;
        (0..self.targets.len()).map(|i| self.residual(i, w).powi(2)).sum::<f64>() / (2.0 * m)
    }

    /// Mean gradient over the given sample indices.
    pub fn gradient_on(&self, w: &Vec2, idx: impl ExactSizeIterator<Item = usize>) -> Vec2 {
        let n = idx.len() as f64;
        let mut g = [0.0; 2];
        for i in idx {
            let r = self.residual(i, w);
            g[0] += r * self.features[i][0];
            g[1] += r * self.features[i][1];
        }
        [g[0] / n, g[1] / n]
    }

    pub fn gradient(&self, w: &Vec2) -> Vec2 {
        self.gradient_on(w, 0..self.targets.len())
    }

    pub fn hessian(&self) -> [Vec2; 2] {
        let m = self.targets.len() as f64;
        let mut h = [[0.0; 2]; 2];
        for a in &self.features {
            h[0][0] += a[0] * a[0] / m;
            h[0][1] += a[0] * a[1] / m;
            h[1][1] += a[1] * a[1] / m;
        }
        h[1][0] = h[0][1];
        h
    }
}

fn sym_eigen(h: &[Vec2; 2]) -> (f64, f64) {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = ((tr * tr) / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

#[derive(Clone, Debug)]
pub struct QuadraticToy {
    pub clients: Vec<LsqClient>,
}

/// What one federated SGD run on the toy observed.
#[derive(Clone, Debug)]
pub struct ToyTrace {
    /// Global objective after each round (index 0 is after round 1).
    pub objective: Vec<f64>,
    /// Largest stochastic-gradient norm drawn.
    pub max_gradient_norm: f64,
    /// Per client, mean of `‖g(w, χ) - ∇F_n(w)‖²` over every draw.
    pub noise_second_moment: Vec<f64>,
}

impl QuadraticToy {
    /// Heterogeneous clients: each has its own feature scale and its own
    /// ground-truth weights.
    pub fn generate(clients: usize, samples: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed, &[stream::TOY]);
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        let clients = (0..clients)
            .map(|_| {
                let scale = [rng.random_range(0.6..1.4), rng.random_range(0.6..1.4)];
                let truth = [1.0 + 0.5 * unit.sample(&mut rng), -2.0 + 0.5 * unit.sample(&mut rng)];
                let features: Vec<Vec2> = (0..samples)
                    .map(|_| [scale[0] * unit.sample(&mut rng), scale[1] * unit.sample(&mut rng)])
                    .collect();
                let targets =
                    features.iter().map(|a| a[0] * truth[0] + a[1] * truth[1] + 0.2 * unit.sample(&mut rng)).collect();
                LsqClient { features, targets }
            })
            .collect();
        QuadraticToy { clients }
    }

    pub fn objective(&self, w: &Vec2) -> f64 {
        self.clients.iter().map(|c| c.objective(w)).sum::<f64>() / self.clients.len() as f64
    }

    /// `(μ, L)`: smallest and largest Hessian eigenvalue over all clients.
    pub fn curvature(&self) -> (f64, f64) {
        self.clients
            .iter()
            .map(|c| sym_eigen(&c.hessian()))
            .fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }

    /// Minimizer of the global objective and its value.
    pub fn optimum(&self) -> (Vec2, f64) {
        let mut h = [[0.0; 2]; 2];
        let mut rhs = [0.0; 2];
        for c in &self.clients {
            let hc = c.hessian();
            let g0 = c.gradient(&[0.0, 0.0]);
            for r in 0..2 {
                rhs[r] -= g0[r];
                for s in 0..2 {
                    h[r][s] += hc[r][s];
                }
            }
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let w = [(rhs[0] * h[1][1] - h[0][1] * rhs[1]) / det, (h[0][0] * rhs[1] - h[1][0] * rhs[0]) / det];
        (w, self.objective(&w))
    }

    /// Federated SGD: every round each client takes `local_iters` mini-batch
    /// steps of size `batch` from the broadcast model, then the server averages.
    pub fn simulate(
        &self,
        w0: Vec2,
        rounds: usize,
        local_iters: usize,
        batch: usize,
        alpha: f64,
        seed: u64,
    ) -> ToyTrace {
        let n = self.clients.len();
        let mut w = w0;
        let mut trace = ToyTrace {
            objective: Vec::with_capacity(rounds),
            max_gradient_norm: 0.0,
            noise_second_moment: vec![0.0; n],
        };
        let mut draws = vec![0usize; n];
        for round in 0..rounds {
            let mut sum = [0.0; 2];
            for (ci, client) in self.clients.iter().enumerate() {
                let mut rng: SimRng = rng_from(seed, &[stream::TOY, ci as u64, round as u64]);
                let mut local = w;
                for _ in 0..local_iters {
                    let idx = rand::seq::index::sample(&mut rng, client.targets.len(), batch);
                    let g = client.gradient_on(&local, idx.into_iter());
                    let full = client.gradient(&local);
                    trace.max_gradient_norm = trace.max_gradient_norm.max(g[0].hypot(g[1]));
                    trace.noise_second_moment[ci] += (g[0] - full[0]).powi(2) + (g[1] - full[1]).powi(2);
                    draws[ci] += 1;
                    local[0] -= alpha * g[0];
                    local[1] -= alpha * g[1];
                }
                sum[0] += local[0];
                sum[1] += local[1];
            }
            w = [sum[0] / n as f64, sum[1] / n as f64];
            trace.objective.push(self.objective(&w));
        }
        for (m, d) in trace.noise_second_moment.iter_mut().zip(draws) {
            *m /= d.max(1) as f64;
        }
        trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_is_stationary() {
        let toy = QuadraticToy::generate(5, 200, 1);
        let (w, f) = toy.optimum();
        let g: Vec2 = toy.clients.iter().fold([0.0, 0.0], |acc, c| {
            let gc = c.gradient(&w);
            [acc[0] + gc[0], acc[1] + gc[1]]
        });
        assert!(g[0].abs() < 1e-10 && g[1].abs() < 1e-10);
        assert!(toy.objective(&[w[0] + 0.1, w[1]]) > f);
        let (mu, l) = toy.curvature();
        assert!(mu > 0.0 && l >= mu);
    }

    #[test]
    fn sgd_approaches_optimum() {
        let toy = QuadraticToy::generate(5, 200, 2);
        let (_, fstar) = toy.optimum();
        let t = toy.simulate([0.0, 0.0], 50, 10, 10, 0.05, 3);
        assert!(t.objective[49] - fstar < 0.1 * (toy.objective(&[0.0, 0.0]) - fstar));
    }
}
