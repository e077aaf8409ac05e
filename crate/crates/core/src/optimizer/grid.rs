use crate::error::{Error, Result};
use crate::network::{ChannelEnv, NodeParams, RouteTopology};

use super::decision::{node_energy, node_latency, tight_slack, DecisionVector, NodeDecision};

/// Largest number of objective evaluations the oracle will perform.
pub const GRID_BUDGET: u128 = 100_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    /// Single-round system latency at `point`.
    pub objective: f64,
    pub point: DecisionVector,
    pub evaluations: u128,
}

/// Grid values `k·max/res` for `k = 1..=res`; zero is excluded because it
/// gives infinite latency.
fn axis(max: f64, res: usize) -> impl Iterator<Item = f64> {
    (1..=res).map(move |k| k as f64 * max / res as f64)
}

fn best_node(node: &NodeParams<f64>, position: usize, env: &ChannelEnv<f64>, res: usize) -> Result<NodeDecision> {
    let mut best: Option<(f64, f64, f64)> = None;
    for p in axis(node.p_max, res) {
        for f in axis(node.f_max, res) {
            if node_energy(node, position, p, f, env) > node.e_max {
                continue;
            }
            let t = node_latency(node, position, p, f, env);
            if best.is_none_or(|(b, _, _)| t < b) {
                best = Some((t, p, f));
            }
        }
    }
    let (_, p, f) = best.ok_or_else(|| Error::Infeasible("no energy-feasible grid point".into()))?;
    Ok(NodeDecision { p, f, slack: tight_slack(node, position, p, env) })
}

/// Exhaustive search of the true single-round latency over the grid
/// `{k·P/res} × {k·F/res}` per node, discarding energy-infeasible points.
///
/// The objective is a max over routes of sums of per-node terms, and every
/// constraint is per node, so the joint grid minimum is found exactly by
/// minimizing each node over its own `res²` grid. The budget therefore
/// applies to `nodes · res²` evaluations.
pub fn grid_search_oracle(topology: &RouteTopology<f64>, env: &ChannelEnv<f64>, res: usize) -> Result<GridResult> {
    topology.validate()?;
    if res == 0 {
        return Err(Error::Argument("grid resolution must be positive".into()));
    }
    let evaluations = topology.node_count() as u128 * (res as u128) * (res as u128);
    if evaluations > GRID_BUDGET {
        return Err(Error::SearchSize { evaluations, budget: GRID_BUDGET });
    }
    let mut point = DecisionVector::from_topology(topology, env);
    for (d, r) in point.routes.iter_mut().zip(&topology.routes) {
        d.leaf = best_node(&r.leaf, 0, env, res)?;
        for (i, (dn, n)) in d.relays.iter_mut().zip(&r.relays).enumerate() {
            *dn = best_node(n, i + 1, env, res)?;
        }
    }
    let objective = super::decision::objective(topology, env, &point)?;
    Ok(GridResult { objective, point, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{system_latency, NetworkSpec};

    fn small() -> (RouteTopology<f64>, ChannelEnv<f64>) {
        NetworkSpec { relays_per_route: vec![1], ..NetworkSpec::default() }.instantiate(12).unwrap()
    }

    #[test]
    fn single_point_grid() {
        let spec =
            NetworkSpec { relays_per_route: vec![1], e_max_leaf: 1.0, e_max_relay: 1.0, ..NetworkSpec::default() };
        let (topo, env) = spec.instantiate(1).unwrap();
        let g = grid_search_oracle(&topo, &env, 1).unwrap();
        for (d, n) in g.point.nodes().zip(topo.nodes()) {
            assert_eq!((d.p, d.f), (n.p_max, n.f_max));
        }
    }

    #[test]
    fn unconstrained_energy_picks_the_corner() {
        let spec = NetworkSpec { e_max_leaf: 1.0, e_max_relay: 1.0, ..NetworkSpec::default() };
        let (topo, env) = spec.instantiate(1).unwrap();
        let g = grid_search_oracle(&topo, &env, 20).unwrap();
        for (d, n) in g.point.nodes().zip(topo.nodes()) {
            assert_eq!((d.p, d.f), (n.p_max, n.f_max));
        }
    }

    #[test]
    fn refinement_never_worsens() {
        let (topo, env) = small();
        let coarse = grid_search_oracle(&topo, &env, 10).unwrap();
        let fine = grid_search_oracle(&topo, &env, 40).unwrap();
        assert!(fine.objective <= coarse.objective);
    }

    #[test]
    fn budget_enforced() {
        let (topo, env) = small();
        assert!(matches!(grid_search_oracle(&topo, &env, 10_000), Err(Error::SearchSize { .. })));
    }

    #[test]
    fn matches_brute_force_enumeration() {
        let (topo, env) = small();
        let res = 14;
        let g = grid_search_oracle(&topo, &env, res).unwrap();
        let grid: Vec<f64> = (1..=res).map(|k| k as f64 / res as f64).collect();
        let mut best = f64::INFINITY;
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        let mut t = topo.clone();
                        let route = &mut t.routes[0];
                        route.leaf.tx_power = a * route.leaf.p_max;
                        route.leaf.cpu_freq = b * route.leaf.f_max;
                        route.relays[0].tx_power = c * route.relays[0].p_max;
                        route.relays[0].cpu_freq = d * route.relays[0].f_max;
                        let costs = system_latency(&t, &env, 1).unwrap();
                        let feasible = costs.nodes.iter().zip(t.nodes()).all(|(c, n)| c.total_energy() <= n.e_max);
                        if feasible {
                            best = best.min(costs.t_round);
                        }
                    }
                }
            }
        }
        assert!((g.objective - best).abs() <= 1e-12 * best, "{} vs {best}", g.objective);
    }
}
