//! `key = value` experiment configuration with `#` comments and dotted keys.

use std::fmt::Write as _;
use std::str::FromStr;

use fedmeter_core::data::{Feature, PartitionMode};
use fedmeter_core::lstm::{LossKind, DEFAULT_HIDDEN};
use fedmeter_core::network::{dbm_to_watts, NetworkSpec};
use fedmeter_core::optimizer::SolverConfig;
use fedmeter_core::pfl::PflConfig;

use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Pfl,
    Fl,
    Standalone,
    Centralized,
    Optimize,
    Gradcheck,
    Reproduce,
}

impl Mode {
    pub const ALL: [Mode; 7] =
        [Mode::Pfl, Mode::Fl, Mode::Standalone, Mode::Centralized, Mode::Optimize, Mode::Gradcheck, Mode::Reproduce];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Pfl => "pfl",
            Mode::Fl => "fl",
            Mode::Standalone => "standalone",
            Mode::Centralized => "centralized",
            Mode::Optimize => "optimize",
            Mode::Gradcheck => "gradcheck",
            Mode::Reproduce => "reproduce",
        }
    }

    /// Modes that train on a dataset and so need `dataset_path`.
    pub fn needs_dataset(self) -> bool {
        matches!(self, Mode::Pfl | Mode::Fl | Mode::Standalone | Mode::Centralized | Mode::Reproduce)
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            format!(
                "unknown mode `{s}` (expected one of pfl, fl, standalone, centralized, optimize, gradcheck, reproduce)"
            )
        })
    }
}

/// Value of `dataset_path` that selects the built-in synthetic household load.
pub const SYNTHETIC_DATASET: &str = "synthetic";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    /// UCI household power file, or `synthetic`.
    pub dataset_path: Option<String>,
    pub output_path: Option<String>,
    pub seed: u64,

    pub synthetic_hours: usize,
    pub train_fraction: f64,
    /// Variable forecast from the UCI file.
    pub feature: Feature,

    pub clients: usize,
    pub rounds: usize,
    pub local_iters: usize,
    pub probe_iters: usize,
    pub lr_candidates: Vec<f64>,
    /// Learning rate of the plain-FL baseline.
    pub fixed_lr: f64,
    pub hidden_size: usize,
    pub dropout: f64,
    pub loss: LossKind,
    /// `0` disables clipping.
    pub clip_norm: f64,
    pub weighted_aggregation: bool,

    pub partition_mode: PartitionMode,
    pub partition_sizes: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    pub batch_size: usize,

    /// Relays per route.
    pub routes: Vec<usize>,
    pub bandwidth_hz: f64,
    pub p_max_leaf_dbm: f64,
    pub p_max_relay_dbm: f64,
    pub noise_dbm_per_hz: f64,
    pub f_max_leaf_hz: f64,
    pub f_max_relay_hz: f64,
    pub switch_cap: f64,
    pub leaf_iters: f64,
    pub relay_iters: f64,
    pub cycles_per_sample: f64,
    pub samples: f64,
    pub e_max_leaf_j: f64,
    pub e_max_relay_j: f64,
    /// `0` derives the size from the model's parameter count.
    pub model_bits: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
    pub distance_m: f64,
    pub rayleigh_scale: f64,

    pub solver: SolverConfig,

    pub gradcheck_seeds: usize,
    pub gradcheck_batch: usize,

    pub channel_seeds: usize,
    pub sweep_points: usize,
    /// Client count of the smaller federation trained alongside the full one.
    pub subset_clients: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let fl = PflConfig::<f64>::default();
        let net = NetworkSpec::default();
        ExperimentConfig {
            mode: None,
            dataset_path: None,
            output_path: None,
            seed: 0,
            synthetic_hours: 24 * 7 * 20,
            train_fraction: 0.8,
            feature: Feature::GlobalActivePower,
            clients: fl.clients,
            rounds: fl.rounds,
            local_iters: fl.local_iters,
            probe_iters: fl.probe_iters,
            lr_candidates: fl.lr_candidates,
            fixed_lr: 0.001,
            hidden_size: DEFAULT_HIDDEN,
            dropout: fl.dropout,
            loss: fl.loss,
            clip_norm: fl.clip_norm.unwrap_or(0.0),
            weighted_aggregation: false,
            partition_mode: PartitionMode::Iid,
            partition_sizes: Vec::new(),
            batch_sizes: Vec::new(),
            batch_size: 16,
            routes: net.relays_per_route,
            bandwidth_hz: net.bandwidth,
            p_max_leaf_dbm: 25.0,
            p_max_relay_dbm: 25.0,
            noise_dbm_per_hz: -174.0,
            f_max_leaf_hz: net.f_max_leaf,
            f_max_relay_hz: net.f_max_relay,
            switch_cap: net.switch_cap,
            leaf_iters: net.leaf_iters,
            relay_iters: net.relay_iters,
            cycles_per_sample: net.cycles_per_sample,
            samples: net.samples,
            e_max_leaf_j: net.e_max_leaf,
            e_max_relay_j: net.e_max_relay,
            model_bits: 0.0,
            pathloss_exponent: net.pathloss_exponent,
            reference_distance_m: net.reference_distance,
            distance_m: net.distance,
            rayleigh_scale: net.rayleigh_scale,
            solver: SolverConfig::default(),
            gradcheck_seeds: 5,
            gradcheck_batch: 1,
            channel_seeds: 20,
            sweep_points: 5,
            subset_clients: 2,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue { key: key.to_string(), value: value.to_string(), expected })
}

fn parse_list<T: FromStr>(key: &str, value: &str, expected: &'static str) -> Result<Vec<T>, ConfigError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_value(key, v.trim(), expected)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::InvalidValue { key: key.into(), value: value.into(), expected: "true or false" }),
    }
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Declares every config key once: its parser and its serializer.
macro_rules! keys {
    ($( $key:literal => $field:ident $(. $sub:ident)* : $kind:ident ),* $(,)?) => {
        fn assign(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), ConfigError> {
            match key {
                $( $key => { cfg.$field $(.$sub)* = keys!(@parse $kind, key, value); } )*
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            }
            Ok(())
        }

        fn write_keys(cfg: &ExperimentConfig, out: &mut String) {
            $( keys!(@write $kind, out, $key, &cfg.$field $(.$sub)*); )*
        }
    };
    (@parse f64, $k:expr, $v:expr) => { parse_value($k, $v, "a number")? };
    (@parse usize, $k:expr, $v:expr) => { parse_value($k, $v, "a non-negative integer")? };
    (@parse u64, $k:expr, $v:expr) => { parse_value($k, $v, "a non-negative integer")? };
    (@parse bool, $k:expr, $v:expr) => { parse_bool($k, $v)? };
    (@parse f64s, $k:expr, $v:expr) => { parse_list($k, $v, "a comma-separated list of numbers")? };
    (@parse usizes, $k:expr, $v:expr) => { parse_list($k, $v, "a comma-separated list of integers")? };
    (@parse path, $k:expr, $v:expr) => { Some($v.to_string()) };
    (@parse mode, $k:expr, $v:expr) => {
        Some($v.parse::<Mode>().map_err(|_| ConfigError::InvalidValue {
            key: $k.into(), value: $v.into(), expected: "a mode name" })?)
    };
    (@parse loss, $k:expr, $v:expr) => {
        match $v {
            "mae" => LossKind::Mae,
            "mse" => LossKind::Mse,
            _ => return Err(ConfigError::InvalidValue { key: $k.into(), value: $v.into(), expected: "mae or mse" }),
        }
    };
    (@parse feature, $k:expr, $v:expr) => {
        Feature::from_name($v).ok_or_else(|| ConfigError::InvalidValue {
            key: $k.into(), value: $v.into(), expected: "a UCI column name" })?
    };
    (@parse partition, $k:expr, $v:expr) => {
        match $v {
            "iid" => PartitionMode::Iid,
            "non_iid" => PartitionMode::NonIid,
            _ => return Err(ConfigError::InvalidValue { key: $k.into(), value: $v.into(), expected: "iid or non_iid" }),
        }
    };
    (@write f64, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {:e}", $k, $v); };
    (@write usize, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {}", $k, $v); };
    (@write u64, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {}", $k, $v); };
    (@write bool, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {}", $k, $v); };
    (@write f64s, $o:expr, $k:expr, $v:expr) => {
        let _ = writeln!($o, "{} = {}", $k, $v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", "));
    };
    (@write usizes, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {}", $k, join($v)); };
    (@write path, $o:expr, $k:expr, $v:expr) => { if let Some(p) = $v { let _ = writeln!($o, "{} = {}", $k, p); } };
    (@write mode, $o:expr, $k:expr, $v:expr) => { if let Some(m) = $v { let _ = writeln!($o, "{} = {}", $k, m.name()); } };
    (@write loss, $o:expr, $k:expr, $v:expr) => {
        let _ = writeln!($o, "{} = {}", $k, match $v { LossKind::Mae => "mae", LossKind::Mse => "mse" });
    };
    (@write feature, $o:expr, $k:expr, $v:expr) => { let _ = writeln!($o, "{} = {}", $k, $v.column_name()); };
    (@write partition, $o:expr, $k:expr, $v:expr) => {
        let _ = writeln!($o, "{} = {}", $k, match $v { PartitionMode::Iid => "iid", PartitionMode::NonIid => "non_iid" });
    };
}

keys! {
    "mode" => mode: mode,
    "dataset_path" => dataset_path: path,
    "output_path" => output_path: path,
    "seed" => seed: u64,
    "data.synthetic_hours" => synthetic_hours: usize,
    "data.train_fraction" => train_fraction: f64,
    "data.feature" => feature: feature,
    "fl.clients" => clients: usize,
    "fl.rounds" => rounds: usize,
    "fl.local_iters" => local_iters: usize,
    "fl.probe_iters" => probe_iters: usize,
    "fl.lr_candidates" => lr_candidates: f64s,
    "fl.fixed_lr" => fixed_lr: f64,
    "fl.hidden_size" => hidden_size: usize,
    "fl.dropout" => dropout: f64,
    "fl.loss" => loss: loss,
    "fl.clip_norm" => clip_norm: f64,
    "fl.weighted_aggregation" => weighted_aggregation: bool,
    "partition.mode" => partition_mode: partition,
    "partition.sizes" => partition_sizes: usizes,
    "partition.batch_sizes" => batch_sizes: usizes,
    "partition.batch_size" => batch_size: usize,
    "topology.routes" => routes: usizes,
    "radio.bandwidth_hz" => bandwidth_hz: f64,
    "radio.p_max_leaf_dbm" => p_max_leaf_dbm: f64,
    "radio.p_max_relay_dbm" => p_max_relay_dbm: f64,
    "radio.noise_dbm_per_hz" => noise_dbm_per_hz: f64,
    "radio.f_max_leaf_hz" => f_max_leaf_hz: f64,
    "radio.f_max_relay_hz" => f_max_relay_hz: f64,
    "radio.switch_cap" => switch_cap: f64,
    "radio.leaf_iters" => leaf_iters: f64,
    "radio.relay_iters" => relay_iters: f64,
    "radio.cycles_per_sample" => cycles_per_sample: f64,
    "radio.samples" => samples: f64,
    "radio.e_max_leaf_j" => e_max_leaf_j: f64,
    "radio.e_max_relay_j" => e_max_relay_j: f64,
    "radio.model_bits" => model_bits: f64,
    "radio.pathloss_exponent" => pathloss_exponent: f64,
    "radio.reference_distance_m" => reference_distance_m: f64,
    "radio.distance_m" => distance_m: f64,
    "radio.rayleigh_scale" => rayleigh_scale: f64,
    "solver.barrier_mu0" => solver.barrier_mu0: f64,
    "solver.barrier_shrink" => solver.barrier_shrink: f64,
    "solver.inner_tol" => solver.inner_tol: f64,
    "solver.outer_tol" => solver.outer_tol: f64,
    "solver.max_sca_iters" => solver.max_sca_iters: usize,
    "solver.max_inner_iters" => solver.max_inner_iters: usize,
    "gradcheck.seeds" => gradcheck_seeds: usize,
    "gradcheck.batch" => gradcheck_batch: usize,
    "reproduce.channel_seeds" => channel_seeds: usize,
    "reproduce.sweep_points" => sweep_points: usize,
    "reproduce.subset_clients" => subset_clients: usize,
}

/// Parses without mode-dependent checks; see [`ExperimentConfig::validate`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, text: raw.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey(key.to_string()));
        }
        assign(&mut cfg, key, value)?;
    }
    cfg.validate_ranges()?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    write_keys(cfg, &mut out);
    out
}

fn positive(key: &str, ok: bool, value: impl ToString) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue { key: key.into(), value: value.to_string(), expected: "a positive value" })
    }
}

impl ExperimentConfig {
    fn validate_ranges(&self) -> Result<(), ConfigError> {
        positive("fl.clients", self.clients > 0, self.clients)?;
        positive("fl.local_iters", self.local_iters > 0, self.local_iters)?;
        positive("fl.probe_iters", self.probe_iters > 0, self.probe_iters)?;
        positive("fl.hidden_size", self.hidden_size > 0, self.hidden_size)?;
        positive("fl.fixed_lr", self.fixed_lr > 0.0, self.fixed_lr)?;
        positive("partition.batch_size", self.batch_size > 0, self.batch_size)?;
        positive("data.synthetic_hours", self.synthetic_hours > 0, self.synthetic_hours)?;
        if self.lr_candidates.is_empty() || self.lr_candidates.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(ConfigError::InvalidValue {
                key: "fl.lr_candidates".into(),
                value: join(&self.lr_candidates),
                expected: "a non-empty list of positive numbers",
            });
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(ConfigError::InvalidValue {
                key: "data.train_fraction".into(),
                value: self.train_fraction.to_string(),
                expected: "a number in (0, 1)",
            });
        }
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(ConfigError::InvalidValue {
                key: "fl.dropout".into(),
                value: self.dropout.to_string(),
                expected: "a number in [0, 1)",
            });
        }
        positive("fl.clip_norm", self.clip_norm >= 0.0, self.clip_norm)?;
        positive("topology.routes", !self.routes.is_empty(), "")?;
        for (key, v) in [
            ("radio.bandwidth_hz", self.bandwidth_hz),
            ("radio.f_max_leaf_hz", self.f_max_leaf_hz),
            ("radio.f_max_relay_hz", self.f_max_relay_hz),
            ("radio.switch_cap", self.switch_cap),
            ("radio.leaf_iters", self.leaf_iters),
            ("radio.relay_iters", self.relay_iters),
            ("radio.cycles_per_sample", self.cycles_per_sample),
            ("radio.samples", self.samples),
            ("radio.e_max_leaf_j", self.e_max_leaf_j),
            ("radio.e_max_relay_j", self.e_max_relay_j),
            ("radio.reference_distance_m", self.reference_distance_m),
            ("radio.distance_m", self.distance_m),
        ] {
            positive(key, v > 0.0 && v.is_finite(), v)?;
        }
        positive("radio.model_bits", self.model_bits >= 0.0, self.model_bits)?;
        positive("radio.rayleigh_scale", self.rayleigh_scale >= 0.0, self.rayleigh_scale)?;
        if !(2.0..=6.0).contains(&self.pathloss_exponent) {
            return Err(ConfigError::InvalidValue {
                key: "radio.pathloss_exponent".into(),
                value: self.pathloss_exponent.to_string(),
                expected: "a number in [2, 6]",
            });
        }
        if let Err(e) = self.solver.validate() {
            return Err(ConfigError::Solver(e.to_string()));
        }
        positive("gradcheck.seeds", self.gradcheck_seeds > 0, self.gradcheck_seeds)?;
        positive("gradcheck.batch", self.gradcheck_batch > 0, self.gradcheck_batch)?;
        positive("reproduce.channel_seeds", self.channel_seeds > 0, self.channel_seeds)?;
        positive("reproduce.sweep_points", self.sweep_points > 1, self.sweep_points)?;
        positive("reproduce.subset_clients", self.subset_clients > 0, self.subset_clients)?;
        Ok(())
    }

    /// Mode-dependent checks: required keys and partition shapes.
    pub fn validate_for(&self, mode: Mode) -> Result<(), ConfigError> {
        self.validate_ranges()?;
        if mode.needs_dataset() && self.dataset_path.is_none() {
            return Err(ConfigError::MissingKey("dataset_path".into()));
        }
        if self.partition_mode == PartitionMode::NonIid && mode.needs_dataset() {
            if self.partition_sizes.len() != self.clients {
                return Err(ConfigError::InvalidValue {
                    key: "partition.sizes".into(),
                    value: join(&self.partition_sizes),
                    expected: "one size per client for non-IID partitioning",
                });
            }
            if self.batch_sizes.len() != self.clients {
                return Err(ConfigError::InvalidValue {
                    key: "partition.batch_sizes".into(),
                    value: join(&self.batch_sizes),
                    expected: "one batch size per client for non-IID partitioning",
                });
            }
        }
        Ok(())
    }

    pub fn pfl_config(&self) -> PflConfig<f64> {
        PflConfig {
            clients: self.clients,
            rounds: self.rounds,
            local_iters: self.local_iters,
            probe_iters: self.probe_iters,
            lr_candidates: self.lr_candidates.clone(),
            seed: self.seed,
            hidden_size: self.hidden_size,
            dropout: self.dropout,
            loss: self.loss,
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
            weighted_aggregation: self.weighted_aggregation,
        }
    }

    /// Network scenario in SI units.
    pub fn network_spec(&self) -> NetworkSpec {
        let model_bits = if self.model_bits > 0.0 {
            self.model_bits
        } else {
            fedmeter_core::lstm::checkpoint::transmitted_bits(self.hidden_size, 1)
        };
        NetworkSpec {
            relays_per_route: self.routes.clone(),
            bandwidth: self.bandwidth_hz,
            p_max_leaf: dbm_to_watts(self.p_max_leaf_dbm),
            p_max_relay: dbm_to_watts(self.p_max_relay_dbm),
            f_max_leaf: self.f_max_leaf_hz,
            f_max_relay: self.f_max_relay_hz,
            switch_cap: self.switch_cap,
            leaf_iters: self.leaf_iters,
            relay_iters: self.relay_iters,
            cycles_per_sample: self.cycles_per_sample,
            samples: self.samples,
            e_max_leaf: self.e_max_leaf_j,
            e_max_relay: self.e_max_relay_j,
            model_bits,
            noise_density: dbm_to_watts(self.noise_dbm_per_hz),
            pathloss_exponent: self.pathloss_exponent,
            reference_distance: self.reference_distance_m,
            distance: self.distance_m,
            rayleigh_scale: self.rayleigh_scale,
        }
    }
}
