//! Mode dispatch and the experiments behind each mode.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use fedmeter_core::data::{
    hourly_means, impute_missing, parse_uci_household, partition, prepare, synthetic::household_load, ClientPartition,
    PartitionMode, PartitionSpec, SlidingWindowDataset,
};
use fedmeter_core::lstm::gradcheck::{check_gradients, random_case};
use fedmeter_core::network::dbm_to_watts;
use fedmeter_core::optimizer::{run_alternating_sca, run_baseline, Baseline, ScaState};
use fedmeter_core::pfl::{run_centralized, run_fl_baseline, run_pfl, run_standalone, PflConfig, RunOutput};

use crate::config::{parse_config, ExperimentConfig, Mode, SYNTHETIC_DATASET};
use crate::csv::{fmt_float, optimization_rows, render, training_rows, CsvRow, TrainingRow};
use crate::error::{CliError, ConfigError};

/// Finite-difference step of the gradient check.
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Largest relative gradient error the gradient check accepts.
pub const GRADCHECK_TOL: f64 = 1e-5;

/// Worker count from `FEDMETER_THREADS`; `0` or unset lets rayon decide.
pub fn thread_count() -> Result<usize, CliError> {
    match std::env::var("FEDMETER_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("FEDMETER_THREADS must be a non-negative integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

/// Reads a config file, applies command-line overrides and validates it for `mode`.
/// A relative `dataset_path` is resolved against the config file's directory.
pub fn load_config(
    path: &Path,
    mode: Mode,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Usage(format!(
                "config selects mode `{}` but the command line asks for `{}`",
                m.name(),
                mode.name()
            )));
        }
    }
    cfg.mode = Some(mode);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_path = Some(o.display().to_string());
    }
    if let Some(d) = &cfg.dataset_path {
        if d != SYNTHETIC_DATASET && Path::new(d).is_relative() {
            let base = path.parent().unwrap_or(Path::new(""));
            cfg.dataset_path = Some(base.join(d).display().to_string());
        }
    }
    cfg.validate_for(mode)?;
    Ok(cfg)
}

/// The hourly series a training run forecasts.
pub fn load_series(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    let path = cfg.dataset_path.as_deref().ok_or_else(|| ConfigError::MissingKey("dataset_path".into()))?;
    if path == SYNTHETIC_DATASET {
        return Ok(household_load(cfg.synthetic_hours, cfg.seed));
    }
    let file = File::open(path).map_err(|_| ConfigError::InvalidValue {
        key: "dataset_path".into(),
        value: path.into(),
        expected: "a readable file or `synthetic`",
    })?;
    let records = impute_missing(parse_uci_household(BufReader::new(file))?)?;
    Ok(hourly_means(&records, cfg.feature))
}

/// Client partitions of the training split and the held-out test windows.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub partitions: Vec<ClientPartition<f64>>,
    pub test: SlidingWindowDataset<f64>,
}

pub fn build_experiment(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let data = prepare::<f64>(&load_series(cfg)?, cfg.train_fraction)?;
    let non_iid = cfg.partition_mode == PartitionMode::NonIid;
    let spec = PartitionSpec {
        clients: cfg.clients,
        mode: cfg.partition_mode,
        sizes: non_iid.then(|| cfg.partition_sizes.clone()),
        batch_sizes: (!cfg.batch_sizes.is_empty()).then(|| cfg.batch_sizes.clone()),
        default_batch_size: cfg.batch_size,
        seed: cfg.seed,
    };
    let partitions = partition(&data.train, &spec)?;
    Ok(Experiment { partitions, test: data.test })
}

/// Standalone runs report each client's own model in the global columns of
/// its row, and the mean over clients in the round's global row.
pub fn standalone_rows(runs: &[RunOutput<f64>]) -> Vec<TrainingRow> {
    let rounds = runs.first().map_or(0, |r| r.rounds.len());
    let n = runs.len() as f64;
    let mut rows = Vec::new();
    for k in 0..rounds {
        let (mut mae, mut rmse) = (0.0, 0.0);
        for run in runs {
            let r = &run.rounds[k];
            rows.push(TrainingRow {
                round: r.round,
                client_id: Some(r.client_ids[0]),
                alpha_best: Some(r.alpha_best[0]),
                train_loss: Some(r.train_loss[0]),
                global_mae: Some(r.global_mae),
                global_rmse: Some(r.global_rmse),
            });
            mae += r.global_mae;
            rmse += r.global_rmse;
        }
        rows.push(TrainingRow {
            round: k + 1,
            client_id: None,
            alpha_best: None,
            train_loss: None,
            global_mae: Some(mae / n),
            global_rmse: Some(rmse / n),
        });
    }
    rows
}

/// Final-round `(mae, rmse)` of a training CSV's global rows.
pub fn final_metrics(rows: &[TrainingRow]) -> Option<(f64, f64)> {
    rows.iter().rev().find(|r| r.client_id.is_none()).and_then(|r| Some((r.global_mae?, r.global_rmse?)))
}

pub fn train_pfl(cfg: &ExperimentConfig, exp: &Experiment) -> Result<RunOutput<f64>, CliError> {
    Ok(run_pfl(&cfg.pfl_config(), &exp.partitions, &exp.test)?)
}

pub fn train_fl(cfg: &ExperimentConfig, exp: &Experiment) -> Result<RunOutput<f64>, CliError> {
    Ok(run_fl_baseline(&cfg.pfl_config(), cfg.fixed_lr, &exp.partitions, &exp.test)?)
}

pub fn train_standalone(cfg: &ExperimentConfig, exp: &Experiment) -> Result<Vec<RunOutput<f64>>, CliError> {
    let pfl = cfg.pfl_config();
    let runs: Vec<_> =
        exp.partitions.par_iter().map(|p| run_standalone(&pfl, p, &exp.test)).collect::<Result<_, _>>()?;
    Ok(runs)
}

pub fn train_centralized(cfg: &ExperimentConfig, exp: &Experiment) -> Result<RunOutput<f64>, CliError> {
    Ok(run_centralized(&cfg.pfl_config(), &exp.partitions, &exp.test)?)
}

/// PFL over the first `subset_clients` clients of the full partition, so the
/// smaller federation holds a subset of the same data.
pub fn train_pfl_subset(cfg: &ExperimentConfig, exp: &Experiment) -> Result<RunOutput<f64>, CliError> {
    let n = cfg.subset_clients.min(exp.partitions.len());
    let pfl = PflConfig { clients: n, ..cfg.pfl_config() };
    Ok(run_pfl(&pfl, &exp.partitions[..n], &exp.test)?)
}

/// Every training run the reproduction compares, on one seed and one partition.
#[derive(Clone, Debug)]
pub struct TrainingSuite {
    pub pfl: RunOutput<f64>,
    pub pfl_subset: RunOutput<f64>,
    pub fl: RunOutput<f64>,
    pub standalone: Vec<RunOutput<f64>>,
    pub centralized: RunOutput<f64>,
}

pub fn run_training_suite(cfg: &ExperimentConfig, exp: &Experiment) -> Result<TrainingSuite, CliError> {
    Ok(TrainingSuite {
        pfl: train_pfl(cfg, exp)?,
        pfl_subset: train_pfl_subset(cfg, exp)?,
        fl: train_fl(cfg, exp)?,
        standalone: train_standalone(cfg, exp)?,
        centralized: train_centralized(cfg, exp)?,
    })
}

/// Joint SCA from the default initialization on the channel drawn from `cfg.seed`.
pub fn optimize(cfg: &ExperimentConfig) -> Result<ScaState, CliError> {
    let (topo, env) = cfg.network_spec().instantiate(cfg.seed)?;
    Ok(run_alternating_sca(&topo, &env, &cfg.solver)?)
}

/// Total latencies over `K` rounds for one channel draw.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineRow {
    pub seed: u64,
    pub joint_s: f64,
    pub leaf_only_s: f64,
    pub relay_only_s: f64,
}

impl CsvRow for BaselineRow {
    const HEADER: &'static str = "seed,joint_s,leaf_only_s,relay_only_s";
    fn encode(&self) -> String {
        format!(
            "{},{},{},{}",
            self.seed,
            fmt_float(self.joint_s),
            fmt_float(self.leaf_only_s),
            fmt_float(self.relay_only_s)
        )
    }
}

pub fn compare_baselines(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<BaselineRow>, CliError> {
    let spec = cfg.network_spec();
    let k = cfg.rounds as f64;
    seeds
        .par_iter()
        .map(|&seed| {
            let (topo, env) = spec.instantiate(seed)?;
            let joint = run_alternating_sca(&topo, &env, &cfg.solver)?;
            let leaf = run_baseline(&topo, &env, Baseline::LeafOnly, &cfg.solver)?;
            let relay = run_baseline(&topo, &env, Baseline::RelayOnly, &cfg.solver)?;
            Ok(BaselineRow {
                seed,
                joint_s: k * joint.objective,
                leaf_only_s: k * leaf.objective,
                relay_only_s: k * relay.objective,
            })
        })
        .collect()
}

/// Mean relative latency reduction of the joint solution against each baseline.
pub fn mean_reductions(rows: &[BaselineRow]) -> (f64, f64) {
    let n = rows.len() as f64;
    let leaf = rows.iter().map(|r| 1.0 - r.joint_s / r.leaf_only_s).sum::<f64>() / n;
    let relay = rows.iter().map(|r| 1.0 - r.joint_s / r.relay_only_s).sum::<f64>() / n;
    (leaf, relay)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    LeafFreq,
    LeafPower,
    RelayFreq,
    RelayPower,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] =
        [SweepParam::LeafFreq, SweepParam::LeafPower, SweepParam::RelayFreq, SweepParam::RelayPower];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LeafFreq => "f_max_leaf_hz",
            SweepParam::LeafPower => "p_max_leaf_dbm",
            SweepParam::RelayFreq => "f_max_relay_hz",
            SweepParam::RelayPower => "p_max_relay_dbm",
        }
    }

    /// Sweep range: 5 to 25 dBm for powers, 0.5 to 2.5 GHz for frequencies.
    pub fn values(self, points: usize) -> Vec<f64> {
        let (lo, hi) = match self {
            SweepParam::LeafPower | SweepParam::RelayPower => (5.0, 25.0),
            SweepParam::LeafFreq | SweepParam::RelayFreq => (0.5e9, 2.5e9),
        };
        (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub value: f64,
    pub seed: u64,
    pub objective_s: f64,
}

impl CsvRow for SweepRow {
    const HEADER: &'static str = "parameter,value,seed,objective_s";
    fn encode(&self) -> String {
        format!("{},{},{},{}", self.parameter, fmt_float(self.value), self.seed, fmt_float(self.objective_s))
    }
}

/// Optimized total latency as one budget varies, with the channel of each seed held fixed.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, seeds: &[u64]) -> Result<Vec<SweepRow>, CliError> {
    let jobs: Vec<(u64, f64)> =
        seeds.iter().flat_map(|&s| param.values(cfg.sweep_points).into_iter().map(move |v| (s, v))).collect();
    jobs.par_iter()
        .map(|&(seed, value)| {
            let mut spec = cfg.network_spec();
            match param {
                SweepParam::LeafFreq => spec.f_max_leaf = value,
                SweepParam::LeafPower => spec.p_max_leaf = dbm_to_watts(value),
                SweepParam::RelayFreq => spec.f_max_relay = value,
                SweepParam::RelayPower => spec.p_max_relay = dbm_to_watts(value),
            }
            let (topo, env) = spec.instantiate(seed)?;
            let state = run_alternating_sca(&topo, &env, &cfg.solver)?;
            Ok(SweepRow { parameter: param.name(), value, seed, objective_s: cfg.rounds as f64 * state.objective })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckRow {
    pub seed: u64,
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub analytic: f64,
    pub numeric: f64,
}

impl CsvRow for GradcheckRow {
    const HEADER: &'static str = "seed,max_relative_error,worst_parameter,analytic,numeric";
    fn encode(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.seed,
            fmt_float(self.max_relative_error),
            self.worst_parameter,
            fmt_float(self.analytic),
            fmt_float(self.numeric)
        )
    }
}

/// Central-difference gradient check of every parameter, one random model per seed.
pub fn gradcheck(cfg: &ExperimentConfig) -> Result<Vec<GradcheckRow>, CliError> {
    let seeds: Vec<u64> = (0..cfg.gradcheck_seeds as u64).map(|i| cfg.seed + i).collect();
    seeds
        .par_iter()
        .map(|&seed| {
            let (params, windows) = random_case(seed, cfg.hidden_size, cfg.gradcheck_batch, cfg.loss)?;
            let batch: Vec<_> = windows.iter().collect();
            let report = check_gradients(&params, &batch, cfg.loss, GRADCHECK_STEP)?;
            Ok(GradcheckRow {
                seed,
                max_relative_error: report.max_relative_error,
                worst_parameter: report.worst_parameter,
                analytic: report.analytic,
                numeric: report.numeric,
            })
        })
        .collect()
}

fn summary_csv(lines: &[(String, f64)]) -> String {
    let mut out = String::from("metric,value\n");
    for (k, v) in lines {
        out.push_str(&format!("{k},{}\n", fmt_float(*v)));
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.channel_seeds as u64).map(|i| cfg.seed + i).collect()
}

/// Writes every training and optimization CSV plus `summary.csv` into `dir`.
pub fn reproduce(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<(String, f64)>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let exp = build_experiment(cfg)?;
    let suite = run_training_suite(cfg, &exp)?;
    let mut summary = Vec::new();
    let mut record = |name: &str, rows: Vec<TrainingRow>| -> Result<(), CliError> {
        write_file(&dir.join(format!("{name}.csv")), &render(&rows))?;
        if let Some((mae, rmse)) = final_metrics(&rows) {
            summary.push((format!("{name}_final_mae"), mae));
            summary.push((format!("{name}_final_rmse"), rmse));
        }
        Ok(())
    };
    record("pfl", training_rows(&suite.pfl, 0))?;
    record("pfl_subset", training_rows(&suite.pfl_subset, 0))?;
    record("fl", training_rows(&suite.fl, 0))?;
    record("standalone", standalone_rows(&suite.standalone))?;
    record("centralized", training_rows(&suite.centralized, 0))?;

    let state = optimize(cfg)?;
    write_file(&dir.join("optimize.csv"), &render(&optimization_rows(&state, cfg.rounds)))?;

    let baselines = compare_baselines(cfg, &seeds(cfg))?;
    write_file(&dir.join("baselines.csv"), &render(&baselines))?;
    let (leaf, relay) = mean_reductions(&baselines);
    summary.push(("mean_reduction_vs_leaf_only".into(), leaf));
    summary.push(("mean_reduction_vs_relay_only".into(), relay));

    let mut sweeps = Vec::new();
    for p in SweepParam::ALL {
        sweeps.extend(sweep(cfg, p, &seeds(cfg))?);
    }
    write_file(&dir.join("sweeps.csv"), &render(&sweeps))?;
    write_file(&dir.join("summary.csv"), &summary_csv(&summary))?;
    Ok(summary)
}

/// Where a single-file mode writes its CSV: a path, or standard output.
fn emit(cfg: &ExperimentConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output_path {
        Some(p) => write_file(Path::new(p), text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Runs one mode to completion. Returns a one-line summary for the error stream.
pub fn execute(mode: Mode, cfg: &ExperimentConfig) -> Result<String, CliError> {
    match mode {
        Mode::Pfl | Mode::Fl | Mode::Centralized => {
            let exp = build_experiment(cfg)?;
            let run = match mode {
                Mode::Pfl => train_pfl(cfg, &exp)?,
                Mode::Fl => train_fl(cfg, &exp)?,
                _ => train_centralized(cfg, &exp)?,
            };
            let rows = training_rows(&run, 0);
            emit(cfg, &render(&rows))?;
            Ok(final_summary(mode, &rows))
        }
        Mode::Standalone => {
            let exp = build_experiment(cfg)?;
            let rows = standalone_rows(&train_standalone(cfg, &exp)?);
            emit(cfg, &render(&rows))?;
            Ok(final_summary(mode, &rows))
        }
        Mode::Optimize => {
            let state = optimize(cfg)?;
            emit(cfg, &render(&optimization_rows(&state, cfg.rounds)))?;
            Ok(format!(
                "optimize: total latency {:.6} s over {} rounds after {} iterations",
                cfg.rounds as f64 * state.objective,
                cfg.rounds,
                state.iteration
            ))
        }
        Mode::Gradcheck => {
            let rows = gradcheck(cfg)?;
            emit(cfg, &render(&rows))?;
            let worst = rows.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
            if worst <= GRADCHECK_TOL {
                Ok(format!("gradcheck: max relative error {worst:.3e} over {} seeds", rows.len()))
            } else {
                Err(CliError::Check(format!("gradcheck: max relative error {worst:.3e} exceeds {GRADCHECK_TOL:e}")))
            }
        }
        Mode::Reproduce => {
            let dir: PathBuf =
                cfg.output_path.clone().ok_or_else(|| ConfigError::MissingKey("output_path".into()))?.into();
            let summary = reproduce(cfg, &dir)?;
            let pairs: Vec<String> = summary.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
            Ok(format!("reproduce: {}", pairs.join(" ")))
        }
    }
}

fn final_summary(mode: Mode, rows: &[TrainingRow]) -> String {
    match final_metrics(rows) {
        Some((mae, rmse)) => format!("{}: final MAE {mae:.6}, RMSE {rmse:.6}", mode.name()),
        None => format!("{}: no rounds run", mode.name()),
    }
}
