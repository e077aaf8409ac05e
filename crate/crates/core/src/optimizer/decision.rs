use crate::error::{arg_err, Result};
use crate::network::{achievable_rate, system_latency, ChannelEnv, NodeParams, RouteTopology};

/// Power, frequency and communication-time slack of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeDecision {
    /// W
    pub p: f64,
    /// cycles/s
    pub f: f64,
    /// `x_r` for leaves, `y_m` for relays, in seconds.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteDecision {
    pub leaf: NodeDecision,
    pub relays: Vec<NodeDecision>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionVector {
    pub routes: Vec<RouteDecision>,
}

/// Models a node transmits per round: its own plus everything it forwards.
pub fn forwarded_models(position: usize) -> f64 {
    (position + 1) as f64
}

/// Slack at its defining equality `q·s/R(p)`.
pub fn tight_slack(node: &NodeParams<f64>, position: usize, p: f64, env: &ChannelEnv<f64>) -> f64 {
    forwarded_models(position) * node.model_bits
        / achievable_rate(node.bandwidth, p, node.channel_gain, env.noise_density)
}

/// True per-round energy at `(p, f)`.
pub fn node_energy(node: &NodeParams<f64>, position: usize, p: f64, f: f64, env: &ChannelEnv<f64>) -> f64 {
    node.energy_coeff() * f * f + p * tight_slack(node, position, p, env)
}

/// True per-round latency at `(p, f)`.
pub fn node_latency(node: &NodeParams<f64>, position: usize, p: f64, f: f64, env: &ChannelEnv<f64>) -> f64 {
    node.cycles() / f + tight_slack(node, position, p, env)
}

impl DecisionVector {
    /// The operating point currently stored in the topology, with tight slacks.
    pub fn from_topology(topology: &RouteTopology<f64>, env: &ChannelEnv<f64>) -> Self {
        let node = |n: &NodeParams<f64>, pos| NodeDecision {
            p: n.tx_power,
            f: n.cpu_freq,
            slack: tight_slack(n, pos, n.tx_power, env),
        };
        DecisionVector {
            routes: topology
                .routes
                .iter()
                .map(|r| RouteDecision {
                    leaf: node(&r.leaf, 0),
                    relays: r.relays.iter().enumerate().map(|(i, n)| node(n, i + 1)).collect(),
                })
                .collect(),
        }
    }

    pub fn matches(&self, topology: &RouteTopology<f64>) -> bool {
        self.routes.len() == topology.routes.len()
            && self.routes.iter().zip(&topology.routes).all(|(d, r)| d.relays.len() == r.relays.len())
    }

    /// Route-major, matching [`RouteTopology::nodes`].
    pub fn nodes(&self) -> impl Iterator<Item = &NodeDecision> {
        self.routes.iter().flat_map(|r| std::iter::once(&r.leaf).chain(r.relays.iter()))
    }

    pub fn p_leaf(&self) -> Vec<f64> {
        self.routes.iter().map(|r| r.leaf.p).collect()
    }

    pub fn f_leaf(&self) -> Vec<f64> {
        self.routes.iter().map(|r| r.leaf.f).collect()
    }

    pub fn x_leaf(&self) -> Vec<f64> {
        self.routes.iter().map(|r| r.leaf.slack).collect()
    }

    pub fn p_relay(&self) -> Vec<f64> {
        self.routes.iter().flat_map(|r| r.relays.iter().map(|n| n.p)).collect()
    }

    pub fn f_relay(&self) -> Vec<f64> {
        self.routes.iter().flat_map(|r| r.relays.iter().map(|n| n.f)).collect()
    }

    pub fn y_relay(&self) -> Vec<f64> {
        self.routes.iter().flat_map(|r| r.relays.iter().map(|n| n.slack)).collect()
    }

    /// Copy of the topology operating at this point.
    pub fn apply(&self, topology: &RouteTopology<f64>) -> Result<RouteTopology<f64>> {
        if !self.matches(topology) {
            return arg_err("decision vector does not match the topology");
        }
        let mut out = topology.clone();
        for (n, d) in out.nodes_mut().zip(self.nodes()) {
            n.tx_power = d.p;
            n.cpu_freq = d.f;
        }
        Ok(out)
    }

    /// Resets every slack to its defining equality.
    pub fn tighten(&mut self, topology: &RouteTopology<f64>, env: &ChannelEnv<f64>) {
        for (d, r) in self.routes.iter_mut().zip(&topology.routes) {
            d.leaf.slack = tight_slack(&r.leaf, 0, d.leaf.p, env);
            for (i, (dn, n)) in d.relays.iter_mut().zip(&r.relays).enumerate() {
                dn.slack = tight_slack(n, i + 1, dn.p, env);
            }
        }
    }
}

/// Single-round system latency of the decision, via the network model.
pub fn objective(topology: &RouteTopology<f64>, env: &ChannelEnv<f64>, point: &DecisionVector) -> Result<f64> {
    Ok(system_latency(&point.apply(topology)?, env, 1)?.t_round)
}

/// Largest violation of the box, energy and slack constraints, each
/// normalized by its bound (`p/P - 1`, `E/E_max - 1`, `1 - x·R/(q·s)`, ...).
/// Zero or negative means feasible.
pub fn max_violation(topology: &RouteTopology<f64>, env: &ChannelEnv<f64>, point: &DecisionVector) -> f64 {
    if !point.matches(topology) {
        return f64::INFINITY;
    }
    let mut worst = f64::NEG_INFINITY;
    for (d, r) in point.routes.iter().zip(&topology.routes) {
        let nodes = std::iter::once((&d.leaf, &r.leaf, 0))
            .chain(d.relays.iter().zip(&r.relays).enumerate().map(|(i, (dn, n))| (dn, n, i + 1)));
        for (dn, n, pos) in nodes {
            let energy = node_energy(n, pos, dn.p, dn.f, env);
            let tight = tight_slack(n, pos, dn.p, env);
            let v = [
                dn.p / n.p_max - 1.0,
                -dn.p / n.p_max,
                dn.f / n.f_max - 1.0,
                -dn.f / n.f_max,
                energy / n.e_max - 1.0,
                1.0 - dn.slack / tight,
            ]
            .into_iter()
            .map(|v| if v.is_nan() { f64::INFINITY } else { v })
            .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(v);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkSpec;

    #[test]
    fn roundtrip_through_topology() {
        let spec = NetworkSpec { e_max_leaf: 1.0, e_max_relay: 1.0, ..NetworkSpec::default() };
        let (topo, env) = spec.instantiate(2).unwrap();
        let d = DecisionVector::from_topology(&topo, &env);
        assert_eq!(d.apply(&topo).unwrap(), topo);
        assert_eq!(d.p_relay().len(), 9);
        assert_eq!(d.x_leaf().len(), 3);
        let obj = objective(&topo, &env, &d).unwrap();
        assert_eq!(obj, system_latency(&topo, &env, 1).unwrap().t_round);
        assert!(max_violation(&topo, &env, &d) <= 1e-12);
    }

    #[test]
    fn violations_detected() {
        let (topo, env) = NetworkSpec::default().instantiate(2).unwrap();
        let mut d = DecisionVector::from_topology(&topo, &env);
        d.routes[1].relays[0].f = topo.routes[1].relays[0].f_max * 1.5;
        assert!((max_violation(&topo, &env, &d) - 0.5).abs() < 1e-12 || max_violation(&topo, &env, &d) > 0.5);
        let mut d = DecisionVector::from_topology(&topo, &env);
        d.routes[0].leaf.slack *= 0.5;
        assert!(max_violation(&topo, &env, &d) >= 0.5 - 1e-12);
    }
}
