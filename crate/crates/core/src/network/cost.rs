use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::radio::achievable_rate;
use super::topology::{ChannelEnv, NodeParams, RouteTopology};

/// Per-round time and energy of one node. Leaf nodes have zero forwarding terms.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeCost<T> {
    pub route: usize,
    /// 0 for the leaf, `m` for the m-th relay.
    pub position: usize,
    pub t_train: T,
    /// Own model upload.
    pub t_up: T,
    /// Forwarding the route's leaf model.
    pub t_tx_leafmodel: T,
    /// Forwarding the `m - 1` upstream relay models.
    pub t_tx_relaymodels: T,
    pub e_train: T,
    pub e_up: T,
    /// Energy spent forwarding others' models.
    pub e_tx: T,
}

impl<T: Scalar> NodeCost<T> {
    pub fn total_time(&self) -> T {
        self.t_train + self.t_up + self.t_tx_leafmodel + self.t_tx_relaymodels
    }

    pub fn total_energy(&self) -> T {
        self.e_train + self.e_up + self.e_tx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyBreakdown<T> {
    /// Route-major, matching [`RouteTopology::nodes`].
    pub nodes: Vec<NodeCost<T>>,
    pub route_totals: Vec<T>,
    /// Max over routes.
    pub t_round: T,
    /// `rounds · t_round` under static channels.
    pub t_total_fl: T,
}

fn upload_time<T: Scalar>(node: &NodeParams<T>, env: &ChannelEnv<T>) -> Result<T> {
    let rate = achievable_rate(node.bandwidth, node.tx_power, node.channel_gain, env.noise_density);
    if !(rate > T::zero()) {
        return Err(Error::InfiniteLatency(format!(
            "zero achievable rate (p = {}, g = {})",
            node.tx_power, node.channel_gain
        )));
    }
    Ok(node.model_bits / rate)
}

pub fn leaf_cost<T: Scalar>(node: &NodeParams<T>, env: &ChannelEnv<T>) -> Result<NodeCost<T>> {
    let t_up = upload_time(node, env)?;
    Ok(NodeCost {
        route: 0,
        position: 0,
        t_train: node.cycles() / node.cpu_freq,
        t_up,
        t_tx_leafmodel: T::zero(),
        t_tx_relaymodels: T::zero(),
        e_train: node.energy_coeff() * node.cpu_freq * node.cpu_freq,
        e_up: t_up * node.tx_power,
        e_tx: T::zero(),
    })
}

/// Relay `m` (1-based) uploads its own model, the leaf's, and `m - 1` relay models.
pub fn relay_cost<T: Scalar>(node: &NodeParams<T>, m: usize, env: &ChannelEnv<T>) -> Result<NodeCost<T>> {
    if m == 0 {
        return Err(Error::Argument("relay index starts at 1".into()));
    }
    let mut cost = leaf_cost(node, env)?;
    cost.position = m;
    cost.t_tx_leafmodel = cost.t_up;
    cost.t_tx_relaymodels = T::from_usize_lossy(m - 1) * cost.t_up;
    cost.e_tx = T::from_usize_lossy(m) * cost.e_up;
    Ok(cost)
}

pub fn system_latency<T: Scalar>(
    topology: &RouteTopology<T>,
    env: &ChannelEnv<T>,
    rounds: usize,
) -> Result<LatencyBreakdown<T>> {
    topology.validate()?;
    let mut nodes = Vec::with_capacity(topology.node_count());
    let mut route_totals = Vec::with_capacity(topology.routes.len());
    for (r, route) in topology.routes.iter().enumerate() {
        let mut leaf = leaf_cost(&route.leaf, env)?;
        leaf.route = r;
        let mut total = leaf.total_time();
        nodes.push(leaf);
        for (i, relay) in route.relays.iter().enumerate() {
            let mut c = relay_cost(relay, i + 1, env)?;
            c.route = r;
            total += c.total_time();
            nodes.push(c);
        }
        route_totals.push(total);
    }
    let t_round = route_totals.iter().copied().fold(T::zero(), T::max);
    Ok(LatencyBreakdown { nodes, route_totals, t_round, t_total_fl: T::from_usize_lossy(rounds) * t_round })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::topology::{NetworkSpec, Route};
    use proptest::prelude::*;

    fn env() -> ChannelEnv<f64> {
        NetworkSpec::default().channel_env(0)
    }

    fn node() -> NodeParams<f64> {
        NodeParams {
            cpu_freq: 2e9,
            samples: 100.0,
            cycles_per_sample: 1e4,
            local_iters: 5.0,
            switch_cap: 1e-28,
            bandwidth: 20e6,
            tx_power: 0.1,
            channel_gain: 1e-10,
            p_max: 0.2,
            f_max: 2e9,
            e_max: 1.0,
            model_bits: 1e6,
        }
    }

    #[test]
    fn leaf_examples() {
        let c = leaf_cost(&node(), &env()).unwrap();
        assert!((c.t_train - 2.5e-3).abs() < 1e-15);
        assert!((c.e_train - 2e-3).abs() < 1e-15);
        assert_eq!(c.e_up, c.t_up * 0.1);
        // Bandwidth and gain chosen so that R = 2e7 bits/s exactly.
        let n = NodeParams { bandwidth: 2e7, tx_power: 1.0, channel_gain: 2e7 * 1e-20, ..node() };
        let e = ChannelEnv { noise_density: 1e-20, ..env() };
        assert!((leaf_cost(&n, &e).unwrap().t_up - 0.05).abs() < 1e-15);
    }

    #[test]
    fn relay_examples() {
        let leaf = leaf_cost(&node(), &env()).unwrap();
        let r1 = relay_cost(&node(), 1, &env()).unwrap();
        assert!((r1.total_time() - r1.t_train - 2.0 * leaf.t_up).abs() < 1e-15);
        let r2 = relay_cost(&node(), 2, &env()).unwrap();
        assert!((r2.total_energy() - (r2.e_train + 3.0 * r2.e_up)).abs() < 1e-18);
        assert!(relay_cost(&node(), 0, &env()).is_err());
    }

    #[test]
    fn zero_power_is_infinite_latency() {
        let n = NodeParams { tx_power: 0.0, ..node() };
        assert!(matches!(leaf_cost(&n, &env()), Err(Error::InfiniteLatency(_))));
    }

    #[test]
    fn route_aggregation() {
        let topo = RouteTopology { routes: vec![Route { leaf: node(), relays: vec![node(); 3] }] };
        let b = system_latency(&topo, &env(), 2).unwrap();
        let hand: f64 = b.nodes.iter().map(|c| c.t_train + c.t_up + c.t_tx_leafmodel + c.t_tx_relaymodels).sum();
        assert!((b.route_totals[0] - hand).abs() <= 1e-15 * hand);
        assert_eq!(b.t_round, b.route_totals[0]);
        assert_eq!(b.t_total_fl, 2.0 * b.t_round);
    }

    #[test]
    fn rounds_times_max_route() {
        // Route latencies 1, 2, 3 s from compute alone (communication made negligible).
        let fast = |secs: f64| NodeParams { cycles_per_sample: secs * 2e9 / 500.0, model_bits: 1e-9, ..node() };
        let topo = RouteTopology {
            routes: [1.0, 2.0, 3.0].iter().map(|&s| Route { leaf: fast(s), relays: vec![] }).collect(),
        };
        let b = system_latency(&topo, &env(), 2).unwrap();
        assert!((b.t_total_fl - 6.0).abs() < 1e-6);
    }

    #[test]
    fn default_topology_resummation() {
        let (topo, env) = NetworkSpec::default().instantiate(4).unwrap();
        let b = system_latency(&topo, &env, 100).unwrap();
        let mut totals = vec![0.0; topo.routes.len()];
        for c in &b.nodes {
            totals[c.route] += c.total_time();
        }
        let max = totals.iter().cloned().fold(0.0, f64::max);
        assert!((b.t_round - max).abs() <= 1e-12 * max);
        assert!((b.t_total_fl - 100.0 * max).abs() <= 1e-12 * 100.0 * max);
    }

    proptest! {
        #[test]
        fn latency_decreases_in_frequency_and_power(
            f1 in 1e8f64..2e9, df in 1e6f64..1e9, p1 in 1e-3f64..0.2, dp in 1e-4f64..0.1,
        ) {
            let base = NodeParams { cpu_freq: f1, tx_power: p1, f_max: 4e9, p_max: 1.0, ..node() };
            let t0 = leaf_cost(&base, &env()).unwrap().total_time();
            let tf = leaf_cost(&NodeParams { cpu_freq: f1 + df, ..base.clone() }, &env()).unwrap().total_time();
            let tp = leaf_cost(&NodeParams { tx_power: p1 + dp, ..base.clone() }, &env()).unwrap().total_time();
            prop_assert!(tf < t0);
            prop_assert!(tp < t0);
        }

        #[test]
        fn doubling_model_size_doubles_communication(seed in 0u64..1000) {
            let (topo, env) = NetworkSpec::default().instantiate(seed).unwrap();
            let mut big = topo.clone();
            big.nodes_mut().for_each(|n| n.model_bits *= 2.0);
            let a = system_latency(&topo, &env, 1).unwrap();
            let b = system_latency(&big, &env, 1).unwrap();
            for (x, y) in a.nodes.iter().zip(&b.nodes) {
                prop_assert_eq!(x.t_train, y.t_train);
                prop_assert_eq!(x.e_train, y.e_train);
                for (u, v) in [(x.t_up, y.t_up), (x.t_tx_leafmodel, y.t_tx_leafmodel),
                               (x.t_tx_relaymodels, y.t_tx_relaymodels), (x.e_up, y.e_up), (x.e_tx, y.e_tx)] {
                    prop_assert!((v - 2.0 * u).abs() <= 1e-14 * v.abs().max(1e-300));
                }
            }
        }

        #[test]
        fn components_non_negative_and_additive(seed in 0u64..1000, rounds in 1usize..200) {
            let (topo, env) = NetworkSpec::default().instantiate(seed).unwrap();
            let b = system_latency(&topo, &env, rounds).unwrap();
            for c in &b.nodes {
                for v in [c.t_train, c.t_up, c.t_tx_leafmodel, c.t_tx_relaymodels, c.e_train, c.e_up, c.e_tx] {
                    prop_assert!(v >= 0.0);
                }
                prop_assert_eq!(c.e_up, c.t_up * topo.nodes().nth(b.nodes.iter().position(|x| x == c).unwrap()).unwrap().tx_power);
            }
            let mut totals = vec![0.0; topo.routes.len()];
            b.nodes.iter().for_each(|c| totals[c.route] += c.total_time());
            for (a, e) in totals.iter().zip(&b.route_totals) {
                prop_assert!((a - e).abs() <= 1e-12 * e);
            }
        }
    }
}
