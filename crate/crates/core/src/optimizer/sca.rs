use crate::error::{Error, Result};
use crate::network::{ChannelEnv, NodeParams, RouteTopology};

use super::blocks::{solve_leaf_block, solve_relay_block};
use super::config::SolverConfig;
use super::decision::{max_violation, node_energy, objective, tight_slack, DecisionVector, NodeDecision};

/// Which blocks an SCA run updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Blocks {
    Joint,
    LeafOnly,
    RelayOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    LeafOnly,
    RelayOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaState {
    /// SCA iterations performed.
    pub iteration: usize,
    pub point: DecisionVector,
    /// Single-round system latency at `point`, seconds.
    pub objective: f64,
    /// Objective before the first iteration, then after each one.
    pub history: Vec<f64>,
    /// Normalized constraint violation aligned with `history`.
    pub violations: Vec<f64>,
    pub converged: bool,
}

fn initial_node(node: &NodeParams<f64>, position: usize, env: &ChannelEnv<f64>) -> Result<NodeDecision> {
    let infeasible = |why: &str| Err(Error::Infeasible(why.to_string()));
    if !(node.e_max > 0.0) {
        return infeasible("energy budget must be positive");
    }
    if !(node.channel_gain > 0.0) {
        return infeasible("zero channel gain gives zero rate at every power");
    }
    let upload_energy = |p: f64| node_energy(node, position, p, 0.0, env);
    let mut p = node.p_max / 2.0;
    let mut f = node.f_max / 2.0;
    if node_energy(node, position, p, f, env) > node.e_max {
        // Shrink power until uploading alone uses at most half the budget.
        let mut halvings = 0;
        while upload_energy(p) > 0.5 * node.e_max {
            p *= 0.5;
            halvings += 1;
            if halvings > 200 {
                return infeasible("upload energy exceeds the budget at every power");
            }
        }
        // Bisect for the largest frequency in (0, F/2] that fits the budget.
        let (mut lo, mut hi) = (0.0, f);
        if node_energy(node, position, p, hi, env) > node.e_max {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if node_energy(node, position, p, mid, env) <= node.e_max {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            f = lo;
        }
        if !(f > 0.0) {
            return infeasible("no positive frequency fits the energy budget");
        }
    }
    Ok(NodeDecision { p, f, slack: tight_slack(node, position, p, env) })
}

/// Every node at half its power and frequency budget, reduced by bisection
/// where that violates the energy budget; slacks at their defining equalities.
pub fn initialize_feasible(topology: &RouteTopology<f64>, env: &ChannelEnv<f64>) -> Result<DecisionVector> {
    topology.validate()?;
    let mut d = DecisionVector::from_topology(topology, env);
    for (dr, r) in d.routes.iter_mut().zip(&topology.routes) {
        dr.leaf = initial_node(&r.leaf, 0, env)?;
        for (i, (dn, n)) in dr.relays.iter_mut().zip(&r.relays).enumerate() {
            *dn = initial_node(n, i + 1, env)?;
        }
    }
    Ok(d)
}

/// Alternating SCA from an explicit feasible start.
pub fn run_sca_from(
    topology: &RouteTopology<f64>,
    env: &ChannelEnv<f64>,
    cfg: &SolverConfig,
    start: DecisionVector,
    blocks: Blocks,
) -> Result<ScaState> {
    cfg.validate()?;
    let mut point = start;
    point.tighten(topology, env);
    let mut obj = objective(topology, env, &point)?;
    let mut state = ScaState {
        iteration: 0,
        point: point.clone(),
        objective: obj,
        history: vec![obj],
        violations: vec![max_violation(topology, env, &point)],
        converged: false,
    };
    for i in 1..=cfg.max_sca_iters {
        if blocks != Blocks::RelayOnly {
            point = solve_leaf_block(&point, topology, env, cfg)?;
        }
        if blocks != Blocks::LeafOnly {
            point = solve_relay_block(&point, topology, env, cfg)?;
        }
        point.tighten(topology, env);
        let next = objective(topology, env, &point)?;
        let violation = max_violation(topology, env, &point);
        state.iteration = i;
        state.history.push(next.min(obj));
        state.violations.push(violation);
        if next <= obj {
            state.point = point.clone();
            state.objective = next;
        }
        let change = (obj - next).abs() / obj;
        obj = state.objective;
        if change < cfg.outer_tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

pub fn run_alternating_sca(
    topology: &RouteTopology<f64>,
    env: &ChannelEnv<f64>,
    cfg: &SolverConfig,
) -> Result<ScaState> {
    let start = initialize_feasible(topology, env)?;
    run_sca_from(topology, env, cfg, start, Blocks::Joint)
}

/// Single-block optimization with the other block held at its initialization.
pub fn run_baseline(
    topology: &RouteTopology<f64>,
    env: &ChannelEnv<f64>,
    which: Baseline,
    cfg: &SolverConfig,
) -> Result<ScaState> {
    let start = initialize_feasible(topology, env)?;
    let blocks = match which {
        Baseline::LeafOnly => Blocks::LeafOnly,
        Baseline::RelayOnly => Blocks::RelayOnly,
    };
    run_sca_from(topology, env, cfg, start, blocks)
}
