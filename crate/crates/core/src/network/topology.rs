use rand_distr::{Distribution, Exp1};

use crate::error::{arg_err, Result};
use crate::lstm::checkpoint::transmitted_bits;
use crate::lstm::DEFAULT_HIDDEN;
use crate::rng::{rng_from, stream};
use crate::scalar::Scalar;

use super::radio::dbm_to_watts;

/// One smart meter's compute and radio parameters, in SI units.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeParams<T> {
    /// f, cycles/s
    pub cpu_freq: T,
    /// D
    pub samples: T,
    /// C, cycles per sample
    pub cycles_per_sample: T,
    /// L
    pub local_iters: T,
    /// ζ
    pub switch_cap: T,
    /// b, Hz
    pub bandwidth: T,
    /// p, W
    pub tx_power: T,
    /// g
    pub channel_gain: T,
    /// P, W
    pub p_max: T,
    /// F, cycles/s
    pub f_max: T,
    /// J
    pub e_max: T,
    /// s, bits
    pub model_bits: T,
}

impl<T: Scalar> NodeParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("samples", self.samples),
            ("cycles_per_sample", self.cycles_per_sample),
            ("local_iters", self.local_iters),
            ("switch_cap", self.switch_cap),
            ("bandwidth", self.bandwidth),
            ("p_max", self.p_max),
            ("f_max", self.f_max),
            ("e_max", self.e_max),
            ("model_bits", self.model_bits),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > T::zero() && v.is_finite())) {
            return arg_err(format!("{name} must be positive and finite, got {v}"));
        }
        if !(self.tx_power >= T::zero() && self.tx_power <= self.p_max) {
            return arg_err(format!("tx_power {} outside [0, {}]", self.tx_power, self.p_max));
        }
        if !(self.cpu_freq > T::zero() && self.cpu_freq <= self.f_max) {
            return arg_err(format!("cpu_freq {} outside (0, {}]", self.cpu_freq, self.f_max));
        }
        if !(self.channel_gain >= T::zero() && self.channel_gain.is_finite()) {
            return arg_err(format!("channel gain {} must be non-negative", self.channel_gain));
        }
        Ok(())
    }

    /// `L·C·D`, cycles per round.
    pub fn cycles(&self) -> T {
        self.local_iters * self.cycles_per_sample * self.samples
    }

    /// `L·ζ·C·D`, so that training energy is `energy_coeff · f²`.
    pub fn energy_coeff(&self) -> T {
        self.cycles() * self.switch_cap
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEnv<T> {
    /// n0, W/Hz
    pub noise_density: T,
    pub pathloss_exponent: T,
    /// m
    pub reference_distance: T,
    /// Link distance per node in route-major order (leaf, then relays).
    pub node_distances: Vec<T>,
    /// Mean of the fading power `|h|²`; also absorbs the loss at the reference distance.
    pub rayleigh_scale: T,
    pub seed: u64,
}

impl<T: Scalar> ChannelEnv<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_density > T::zero()) {
            return arg_err("noise density must be positive");
        }
        if !(self.pathloss_exponent >= T::lit(2.0) && self.pathloss_exponent <= T::lit(6.0)) {
            return arg_err(format!("path-loss exponent {} outside [2, 6]", self.pathloss_exponent));
        }
        if !(self.reference_distance > T::zero()) {
            return arg_err("reference distance must be positive");
        }
        if self.node_distances.iter().any(|&d| !(d > T::zero())) {
            return arg_err("node distances must be positive");
        }
        if !(self.rayleigh_scale >= T::zero()) {
            return arg_err("rayleigh scale must be non-negative");
        }
        Ok(())
    }

    pub fn pathloss(&self, distance: T) -> T {
        (distance / self.reference_distance).powf(-self.pathloss_exponent)
    }
}

/// A chain leaf → relay 1 → … → relay M → server.
#[derive(Clone, Debug, PartialEq)]
pub struct Route<T> {
    pub leaf: NodeParams<T>,
    pub relays: Vec<NodeParams<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteTopology<T> {
    pub routes: Vec<Route<T>>,
}

impl<T: Scalar> RouteTopology<T> {
    pub fn validate(&self) -> Result<()> {
        if self.routes.is_empty() {
            return arg_err("topology needs at least one route");
        }
        self.nodes().try_for_each(|n| n.validate())
    }

    pub fn node_count(&self) -> usize {
        self.routes.iter().map(|r| 1 + r.relays.len()).sum()
    }

    /// Nodes in route-major order: each route's leaf, then its relays.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeParams<T>> {
        self.routes.iter().flat_map(|r| std::iter::once(&r.leaf).chain(r.relays.iter()))
    }

    pub fn nodes_mut(&mut self) -> impl Iterator<Item = &mut NodeParams<T>> {
        self.routes.iter_mut().flat_map(|r| std::iter::once(&mut r.leaf).chain(r.relays.iter_mut()))
    }

    pub fn set_gains(&mut self, gains: &[T]) -> Result<()> {
        if gains.len() != self.node_count() {
            return arg_err(format!("{} gains for {} nodes", gains.len(), self.node_count()));
        }
        self.nodes_mut().zip(gains).for_each(|(n, &g)| n.channel_gain = g);
        Ok(())
    }
}

/// `g = rayleigh_scale · |h|² · (d/d0)^(-exponent)` with `|h|² ~ Exp(1)`,
/// one draw per node in route-major order.
pub fn sample_channel_gains<T: Scalar>(topology: &RouteTopology<T>, env: &ChannelEnv<T>) -> Result<Vec<T>> {
    env.validate()?;
    if env.node_distances.len() != topology.node_count() {
        return arg_err(format!("{} node distances for {} nodes", env.node_distances.len(), topology.node_count()));
    }
    let mut rng = rng_from(env.seed, &[stream::CHANNEL]);
    Ok(env
        .node_distances
        .iter()
        .map(|&d| {
            let fading: f64 = Exp1.sample(&mut rng);
            env.rayleigh_scale * T::lit(fading) * env.pathloss(d)
        })
        .collect())
}

/// Gains with fading replaced by its mean.
pub fn mean_channel_gains<T: Scalar>(env: &ChannelEnv<T>) -> Vec<T> {
    env.node_distances.iter().map(|&d| env.rayleigh_scale * env.pathloss(d)).collect()
}

/// Scenario-level parameters from which a topology and channel are built.
/// Powers are in watts; the config layer converts from dBm.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    /// Relay count per route.
    pub relays_per_route: Vec<usize>,
    pub bandwidth: f64,
    pub p_max_leaf: f64,
    pub p_max_relay: f64,
    pub f_max_leaf: f64,
    pub f_max_relay: f64,
    pub switch_cap: f64,
    pub leaf_iters: f64,
    pub relay_iters: f64,
    pub cycles_per_sample: f64,
    pub samples: f64,
    pub e_max_leaf: f64,
    pub e_max_relay: f64,
    pub model_bits: f64,
    pub noise_density: f64,
    pub pathloss_exponent: f64,
    pub reference_distance: f64,
    pub distance: f64,
    pub rayleigh_scale: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            relays_per_route: vec![2, 3, 4],
            bandwidth: 20e6,
            p_max_leaf: dbm_to_watts(25.0),
            p_max_relay: dbm_to_watts(25.0),
            f_max_leaf: 2e9,
            f_max_relay: 2e9,
            switch_cap: 1e-28,
            leaf_iters: 5.0,
            relay_iters: 15.0,
            cycles_per_sample: 1e4,
            samples: 100.0,
            e_max_leaf: 2e-3,
            e_max_relay: 8e-3,
            model_bits: transmitted_bits(DEFAULT_HIDDEN, 1),
            noise_density: dbm_to_watts(-174.0),
            pathloss_exponent: 3.8,
            reference_distance: 1.0,
            distance: 50.0,
            rayleigh_scale: 1e-3,
        }
    }
}

impl NetworkSpec {
    fn node(&self, relay: bool) -> NodeParams<f64> {
        let (p_max, f_max, iters, e_max) = if relay {
            (self.p_max_relay, self.f_max_relay, self.relay_iters, self.e_max_relay)
        } else {
            (self.p_max_leaf, self.f_max_leaf, self.leaf_iters, self.e_max_leaf)
        };
        NodeParams {
            cpu_freq: f_max / 2.0,
            samples: self.samples,
            cycles_per_sample: self.cycles_per_sample,
            local_iters: iters,
            switch_cap: self.switch_cap,
            bandwidth: self.bandwidth,
            tx_power: p_max / 2.0,
            channel_gain: 0.0,
            p_max,
            f_max,
            e_max,
            model_bits: self.model_bits,
        }
    }

    pub fn channel_env(&self, seed: u64) -> ChannelEnv<f64> {
        let nodes: usize = self.relays_per_route.iter().map(|m| m + 1).sum();
        ChannelEnv {
            noise_density: self.noise_density,
            pathloss_exponent: self.pathloss_exponent,
            reference_distance: self.reference_distance,
            node_distances: vec![self.distance; nodes],
            rayleigh_scale: self.rayleigh_scale,
            seed,
        }
    }

    /// Topology with zero gains and every node at half its power and frequency budget.
    pub fn topology(&self) -> RouteTopology<f64> {
        RouteTopology {
            routes: self
                .relays_per_route
                .iter()
                .map(|&m| Route { leaf: self.node(false), relays: (0..m).map(|_| self.node(true)).collect() })
                .collect(),
        }
    }

    /// Topology plus a channel realization drawn from `seed`.
    pub fn instantiate(&self, seed: u64) -> Result<(RouteTopology<f64>, ChannelEnv<f64>)> {
        let env = self.channel_env(seed);
        let mut topo = self.topology();
        let gains = sample_channel_gains(&topo, &env)?;
        topo.set_gains(&gains)?;
        topo.validate()?;
        Ok((topo, env))
    }
}
