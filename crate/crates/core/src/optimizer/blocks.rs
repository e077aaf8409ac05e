//! The convexified per-block subproblems.
//!
//! Within a block the route costs are sums of independent per-node terms,
//! and each node's constraints involve only its own variables, so the
//! epigraph problem over the whole block is minimized by minimizing every
//! node's latency separately. Each node is a three-variable convex program
//! in `(p, f, slack)`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::network::{ChannelEnv, NodeParams, RouteTopology};

use super::barrier::{solve_barrier, BarrierProblem, BarrierSettings, Eval};
use super::config::SolverConfig;
use super::decision::{forwarded_models, node_energy, node_latency, tight_slack, DecisionVector, NodeDecision};
use super::surrogate::rate_minorant;

/// One node's convexified subproblem around `(p_i, x_i)`, in variables
/// scaled to `u = (p/P, f/F, x/x_i)`:
///
/// ```text
/// min  A/f + x
/// s.t. c·f² + ½(p_i/x_i)x² + ½(x_i/p_i)p² ≤ E
///      q·s·ln2/(b·x) ≤ ln(1+z_i) + z_i/(1+z_i) - z_i²/((1+z_i)·z(p))
///      0 < p ≤ P,  0 < f ≤ F,  x > 0
/// ```
struct NodeProblem {
    cycles: f64,
    energy_coeff: f64,
    p_max: f64,
    f_max: f64,
    e_max: f64,
    /// SNR per watt.
    snr_per_watt: f64,
    /// `q·s·ln2/b`
    kappa: f64,
    p_i: f64,
    x_i: f64,
    z_i: f64,
    /// Objective normalization.
    scale: f64,
}

impl NodeProblem {
    fn new(node: &NodeParams<f64>, position: usize, incumbent: &NodeDecision, env: &ChannelEnv<f64>) -> Self {
        let x_i = tight_slack(node, position, incumbent.p, env);
        let snr_per_watt = node.channel_gain / (node.bandwidth * env.noise_density);
        NodeProblem {
            cycles: node.cycles(),
            energy_coeff: node.energy_coeff(),
            p_max: node.p_max,
            f_max: node.f_max,
            e_max: node.e_max,
            snr_per_watt,
            kappa: forwarded_models(position) * node.model_bits * LN_2 / node.bandwidth,
            p_i: incumbent.p,
            x_i,
            z_i: snr_per_watt * incumbent.p,
            scale: node.cycles() / incumbent.f + x_i,
        }
    }

    fn unscale(&self, u: &[f64]) -> (f64, f64, f64) {
        (u[0] * self.p_max, u[1] * self.f_max, u[2] * self.x_i)
    }

    fn energy_surrogate(&self, p: f64, f: f64, x: f64) -> f64 {
        self.energy_coeff * f * f + 0.5 * (self.p_i / self.x_i) * x * x + 0.5 * (self.x_i / self.p_i) * p * p
    }

    fn rate_gap(&self, p: f64, x: f64) -> f64 {
        self.kappa / x - rate_minorant(self.snr_per_watt * p, self.z_i)
    }

    /// A strictly feasible point near the incumbent: slightly lower power,
    /// slightly longer slack, and a frequency that leaves energy headroom.
    fn interior_start(&self, f_i: f64) -> Option<Vec<f64>> {
        let mut delta = 1e-3;
        while delta > 1e-12 {
            let p = (self.p_i * (1.0 - delta)).min(self.p_max * (1.0 - delta));
            let lower = rate_minorant(self.snr_per_watt * p, self.z_i);
            if lower > 0.0 {
                let x = self.kappa / lower * (1.0 + delta);
                let budget = self.e_max - self.energy_surrogate(p, 0.0, x);
                if budget > 0.0 {
                    let f = f_i.min(self.f_max).min((budget / self.energy_coeff).sqrt()) * (1.0 - delta);
                    let u = vec![p / self.p_max, f / self.f_max, x / self.x_i];
                    if f > 0.0 && self.constraints(&u).iter().all(|g| g.value < 0.0) {
                        return Some(u);
                    }
                }
            }
            delta *= 0.1;
        }
        None
    }
}

fn diag3(a: f64, b: f64, c: f64) -> Vec<f64> {
    vec![a, 0.0, 0.0, 0.0, b, 0.0, 0.0, 0.0, c]
}

impl BarrierProblem for NodeProblem {
    fn dim(&self) -> usize {
        3
    }

    fn objective(&self, u: &[f64]) -> Eval {
        let a = self.cycles / self.f_max / self.scale;
        let xs = self.x_i / self.scale;
        Eval {
            value: a / u[1] + xs * u[2],
            grad: vec![0.0, -a / (u[1] * u[1]), xs],
            hess: diag3(0.0, 2.0 * a / (u[1] * u[1] * u[1]), 0.0),
        }
    }

    fn constraints(&self, u: &[f64]) -> Vec<Eval> {
        let (p, f, x) = self.unscale(u);
        // Energy, normalized by E.
        let ce = self.energy_coeff * self.f_max * self.f_max / self.e_max;
        let cx = 0.5 * self.p_i * self.x_i / self.e_max;
        let cp = 0.5 * (self.x_i / self.p_i) * self.p_max * self.p_max / self.e_max;
        let energy = Eval {
            value: self.energy_surrogate(p, f, x) / self.e_max - 1.0,
            grad: vec![2.0 * cp * u[0], 2.0 * ce * u[1], 2.0 * cx * u[2]],
            hess: diag3(2.0 * cp, 2.0 * ce, 2.0 * cx),
        };
        // Rate: κ/(x_i u_x) + β/(P u_p) - const, with β = z_i²/((1+z_i)·snr_per_watt).
        let k = self.kappa / self.x_i;
        let beta = self.z_i * self.z_i / ((1.0 + self.z_i) * self.snr_per_watt) / self.p_max;
        let rate = Eval {
            value: self.rate_gap(p, x),
            grad: vec![-beta / (u[0] * u[0]), 0.0, -k / (u[2] * u[2])],
            hess: diag3(2.0 * beta / u[0].powi(3), 0.0, 2.0 * k / u[2].powi(3)),
        };
        let lin = |value: f64, i: usize, sign: f64| {
            let mut grad = vec![0.0; 3];
            grad[i] = sign;
            Eval { value, grad, hess: vec![0.0; 9] }
        };
        vec![
            energy,
            rate,
            lin(u[0] - 1.0, 0, 1.0),
            lin(-u[0], 0, -1.0),
            lin(u[1] - 1.0, 1, 1.0),
            lin(-u[1], 1, -1.0),
            lin(-u[2], 2, -1.0),
        ]
    }
}

/// One SCA step for a single node. Returns the incumbent unchanged if the
/// step would not lower the node's true latency.
pub(crate) fn solve_node(
    node: &NodeParams<f64>,
    position: usize,
    incumbent: &NodeDecision,
    env: &ChannelEnv<f64>,
    cfg: &SolverConfig,
) -> Result<NodeDecision> {
    let problem = NodeProblem::new(node, position, incumbent, env);
    let Some(start) = problem.interior_start(incumbent.f) else {
        return Ok(*incumbent);
    };
    let settings = BarrierSettings {
        mu0: cfg.barrier_mu0,
        shrink: cfg.barrier_shrink,
        tol: cfg.inner_tol,
        max_iters: cfg.max_inner_iters,
    };
    let sol = solve_barrier(&problem, &start, &settings).map_err(|e| match e {
        Error::Solver { iterations, message, last_iterate } => Error::Solver {
            iterations,
            message,
            last_iterate: {
                let (p, f, x) = problem.unscale(&last_iterate);
                vec![p, f, x]
            },
        },
        other => other,
    })?;
    let (p, f, _) = problem.unscale(&sol.x);
    let candidate = NodeDecision { p, f, slack: tight_slack(node, position, p, env) };
    let old = node_latency(node, position, incumbent.p, incumbent.f, env);
    let new = node_latency(node, position, p, f, env);
    let feasible = p > 0.0
        && p <= node.p_max
        && f > 0.0
        && f <= node.f_max
        && node_energy(node, position, p, f, env) <= node.e_max;
    Ok(if feasible && new <= old { candidate } else { *incumbent })
}

fn check_shape(state: &DecisionVector, topology: &RouteTopology<f64>) -> Result<()> {
    if state.matches(topology) {
        Ok(())
    } else {
        Err(Error::Argument("decision vector does not match the topology".into()))
    }
}

/// Updates every leaf's `(p, f, x)` with relay variables frozen.
pub fn solve_leaf_block(
    state: &DecisionVector,
    topology: &RouteTopology<f64>,
    env: &ChannelEnv<f64>,
    cfg: &SolverConfig,
) -> Result<DecisionVector> {
    check_shape(state, topology)?;
    let mut next = state.clone();
    for (d, r) in next.routes.iter_mut().zip(&topology.routes) {
        d.leaf = solve_node(&r.leaf, 0, &d.leaf, env, cfg)?;
    }
    Ok(next)
}

/// Updates every relay's `(p, f, y)` with leaf variables frozen.
pub fn solve_relay_block(
    state: &DecisionVector,
    topology: &RouteTopology<f64>,
    env: &ChannelEnv<f64>,
    cfg: &SolverConfig,
) -> Result<DecisionVector> {
    check_shape(state, topology)?;
    let mut next = state.clone();
    for (d, r) in next.routes.iter_mut().zip(&topology.routes) {
        for (i, (dn, n)) in d.relays.iter_mut().zip(&r.relays).enumerate() {
            *dn = solve_node(n, i + 1, dn, env, cfg)?;
        }
    }
    Ok(next)
}
