//! Acceptance criteria 1 to 13. Runs sequentially so the timing limits are
//! measured without other tests competing for cores, and prints one PASS/FAIL
//! line per criterion.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;

use fedmeter::config::{parse_config, ExperimentConfig};
use fedmeter::run::{
    build_experiment, compare_baselines, gradcheck, mean_reductions, run_training_suite, sweep, Experiment, SweepParam,
    TrainingSuite, GRADCHECK_TOL,
};
use fedmeter_core::data::PartitionMode;
use fedmeter_core::lstm::{forward_step, CellState, ModelParams};
use fedmeter_core::network::{dbm_to_watts, sample_channel_gains, ChannelEnv, NetworkSpec, RouteTopology};
use fedmeter_core::optimizer::{
    convexified_bilinear, convexified_rate_lower, grid_search_oracle, initialize_feasible, objective,
    run_alternating_sca, SolverConfig,
};
use fedmeter_core::pfl::toy::QuadraticToy;
use fedmeter_core::pfl::{aggregate_fedavg, estimate_sgd_variance, initial_params, theorem_bound, TheoremConstants};
use fedmeter_core::rng::rng_from;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Check {
    ensure(elapsed < limit, format!("{detail}; {:.1} s of {} s allowed", elapsed.as_secs_f64(), limit.as_secs()))
}

/// Desk-scale training setup shared by criteria 3, 5 and 6.
fn training_config() -> ExperimentConfig {
    parse_config("dataset_path = synthetic\n").expect("defaults parse")
}

struct SuiteRun {
    suite: TrainingSuite,
    elapsed: Duration,
}

fn training_suite() -> &'static SuiteRun {
    static SUITE: OnceLock<SuiteRun> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let cfg = training_config();
        let exp = build_experiment(&cfg).expect("dataset builds");
        let suite = run_training_suite(&cfg, &exp).expect("training suite runs");
        SuiteRun { suite, elapsed: start.elapsed() }
    })
}

fn c1_gradient_fidelity() -> Check {
    let start = Instant::now();
    let cfg = training_config();
    let rows = gradcheck(&cfg).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
    let detail = format!(
        "{} seeds, hidden {}, {} parameters each, max relative error {worst:.3e}",
        rows.len(),
        cfg.hidden_size,
        ModelParams::<f64>::parameter_count(cfg.hidden_size, 1)
    );
    ensure(rows.len() >= 5 && worst <= GRADCHECK_TOL, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn oracle_sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Straight-line LSTM step read directly off the flat parameter layout
/// `W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o, W_y, b_y`.
fn oracle_step(flat: &[f64], hidden: usize, h: &[f64], c: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let cols = hidden + 1;
    let block = hidden * cols + hidden;
    let pre = |gate: usize, r: usize| {
        let w = &flat[gate * block..];
        let mut acc = w[hidden * cols + r];
        for k in 0..hidden {
            acc += w[r * cols + k] * h[k];
        }
        acc + w[r * cols + hidden] * x
    };
    let mut h_new = vec![0.0; hidden];
    let mut c_new = vec![0.0; hidden];
    for r in 0..hidden {
        let f = oracle_sigmoid(pre(0, r));
        let i = oracle_sigmoid(pre(1, r));
        let g = pre(2, r).tanh();
        let o = oracle_sigmoid(pre(3, r));
        c_new[r] = f * c[r] + i * g;
        h_new[r] = o * c_new[r].tanh();
    }
    (h_new, c_new)
}

fn c2_forward_oracle() -> Check {
    let hidden = 50;
    let mut rng = rng_from(2, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let params = ModelParams::<f64>::init_uniform(hidden, 1, &mut rng);
        let h: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c: Vec<f64> = (0..hidden).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = rng.random_range(0.0..1.0);
        let (next, _) =
            forward_step(&params, &CellState { h: h.clone(), c: c.clone() }, &[x]).map_err(|e| e.to_string())?;
        let (h_ref, c_ref) = oracle_step(params.as_slice(), hidden, &h, &c, x);
        for k in 0..hidden {
            worst = worst.max((next.h[k] - h_ref[k]).abs()).max((next.c[k] - c_ref[k]).abs());
        }
    }
    ensure(worst <= 1e-12, format!("100 random steps, hidden 50, max |difference| {worst:.3e}"))
}

fn c3_meta_selection() -> Check {
    let run = &training_suite().suite.pfl;
    let cfg = training_config();
    let mut checked = 0;
    let mut violations = 0;
    for round in &run.rounds {
        for (alpha, losses) in round.alpha_best.iter().zip(&round.probe_losses) {
            let min = losses
                .iter()
                .copied()
                .map(|l| if l.is_nan() { f64::INFINITY } else { l })
                .fold(f64::INFINITY, f64::min);
            let chosen = cfg.lr_candidates.iter().position(|a| a == alpha);
            checked += 1;
            if chosen.is_none_or(|i| losses[i] != min) {
                violations += 1;
            }
        }
    }
    let expected = cfg.clients * cfg.rounds;
    ensure(
        checked == expected && violations == 0,
        format!("{checked} selections over {} rounds, {violations} violations", run.rounds.len()),
    )
}

fn c4_fedavg() -> Check {
    let mut rng = rng_from(4, &[]);
    let (mut worst_oracle, mut worst_linear): (f64, f64) = (0.0, 0.0);
    for n in 1..=8 {
        for _ in 0..10 {
            let models: Vec<ModelParams<f64>> = (0..n).map(|_| ModelParams::init_uniform(6, 1, &mut rng)).collect();
            let same = vec![models[0].clone(); n];
            if aggregate_fedavg(&same).map_err(|e| e.to_string())? != models[0] {
                return Err(format!("identity fails for N = {n}"));
            }
            let avg = aggregate_fedavg(&models).map_err(|e| e.to_string())?;
            for k in 0..avg.len() {
                let naive = models.iter().map(|m| m.as_slice()[k]).sum::<f64>() / n as f64;
                worst_oracle = worst_oracle.max((avg.as_slice()[k] - naive).abs());
            }
            let c = rng.random_range(-3.0..3.0);
            let scaled: Vec<ModelParams<f64>> = models
                .iter()
                .map(|m| ModelParams::from_flat(6, 1, m.as_slice().iter().map(|v| c * v).collect()).unwrap())
                .collect();
            let avg_scaled = aggregate_fedavg(&scaled).map_err(|e| e.to_string())?;
            for (a, b) in avg_scaled.as_slice().iter().zip(avg.as_slice()) {
                worst_linear = worst_linear.max((a - c * b).abs());
            }
        }
    }
    ensure(
        worst_oracle <= 1e-15 && worst_linear <= 1e-15,
        format!("N = 1..8: identity exact, oracle diff {worst_oracle:.2e}, scaling diff {worst_linear:.2e}"),
    )
}

fn c5_loss_ordering() -> Check {
    let run = training_suite();
    let s = &run.suite;
    let pfl = s.pfl.final_mae().unwrap();
    let subset = s.pfl_subset.final_mae().unwrap();
    let central = s.centralized.final_mae().unwrap();
    let standalone = s.standalone.iter().map(|r| r.final_mae().unwrap()).sum::<f64>() / s.standalone.len() as f64;
    let detail = format!(
        "final MAE: centralized {central:.5} <= PFL {pfl:.5} <= standalone mean {standalone:.5}; 5-SM {pfl:.5} <= 2-SM {subset:.5}"
    );
    ensure(central <= pfl && pfl <= standalone && pfl <= subset, detail.clone())?;
    within(run.elapsed, Duration::from_secs(30 * 60), detail)
}

fn c6_pfl_vs_fl() -> Check {
    let s = &training_suite().suite;
    let (pm, pr) = (s.pfl.final_mae().unwrap(), s.pfl.final_rmse().unwrap());
    let (fm, fr) = (s.fl.final_mae().unwrap(), s.fl.final_rmse().unwrap());
    ensure(pm <= fm && pr <= fr, format!("PFL MAE {pm:.5} / RMSE {pr:.5} vs FL at 0.001 MAE {fm:.5} / RMSE {fr:.5}"))
}

fn c7_theorem_bound() -> Check {
    let start = Instant::now();
    let (clients, local_iters, rounds, batch) = (5, 10, 200, 4);
    let toy = QuadraticToy::generate(clients, 100, 7);
    let (mu, l) = toy.curvature();
    let (_, f_star) = toy.optimum();
    let w0 = [0.0, 0.0];
    let alpha = 0.5 / l;
    let traces: Vec<_> = (0..10).map(|s| toy.simulate(w0, rounds, local_iters, batch, alpha, s)).collect();
    let b = traces.iter().map(|t| t.max_gradient_norm).fold(0.0, f64::max);
    let sigma2 = traces.iter().flat_map(|t| t.noise_second_moment.iter().copied()).fold(0.0, f64::max);
    let constants = TheoremConstants {
        smoothness: l,
        strong_convexity: mu,
        noise_bound: sigma2.sqrt(),
        gradient_bound: b,
        initial_gap: toy.objective(&w0) - f_star,
    };
    let bound =
        theorem_bound(&constants, rounds, local_iters, clients, &vec![alpha; rounds]).map_err(|e| e.to_string())?;
    let mut worst_ratio: f64 = 0.0;
    let mut failures = 0;
    for (k, &limit) in bound.iter().enumerate() {
        let gap = traces.iter().map(|t| t.objective[k] - f_star).sum::<f64>() / traces.len() as f64;
        worst_ratio = worst_ratio.max(gap / limit);
        failures += usize::from(gap > limit);
    }
    let detail = format!(
        "L {l:.3}, mu {mu:.3}, 10 seeds x 200 rounds: {failures} rounds above the bound, max gap/bound {worst_ratio:.3e}"
    );
    ensure(failures == 0, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn c8_variance() -> Check {
    let mut cfg = training_config();
    cfg.partition_mode = PartitionMode::NonIid;
    cfg.partition_sizes = vec![300, 420, 360, 500, 240];
    cfg.batch_sizes = vec![4, 8, 16, 8, 32];
    let exp: Experiment = build_experiment(&cfg).map_err(|e| e.to_string())?;
    let params = initial_params(&cfg.pfl_config());
    let est = estimate_sgd_variance(&params, &exp.partitions, 100, cfg.loss, 8).map_err(|e| e.to_string())?;
    let n = exp.partitions.len() as f64;
    let limit = est.max_client / (n * n) * n;
    ensure(
        est.averaged <= limit,
        format!(
            "100 draws, N = 5 non-IID: averaged {:.4e} <= max client {:.4e} / N = {limit:.4e}",
            est.averaged, est.max_client
        ),
    )
}

fn random_instance(seed: u64) -> (RouteTopology<f64>, ChannelEnv<f64>) {
    let mut rng = rng_from(seed, &[9]);
    let routes = rng.random_range(1..=3);
    let spec = NetworkSpec {
        relays_per_route: (0..routes).map(|_| rng.random_range(0..=4)).collect(),
        p_max_leaf: dbm_to_watts(rng.random_range(5.0..25.0)),
        p_max_relay: dbm_to_watts(rng.random_range(5.0..25.0)),
        f_max_leaf: rng.random_range(0.5e9..2e9),
        f_max_relay: rng.random_range(0.5e9..2e9),
        e_max_leaf: rng.random_range(1e-3..4e-3),
        e_max_relay: rng.random_range(3e-3..1e-2),
        ..NetworkSpec::default()
    };
    let mut env = spec.channel_env(seed);
    env.node_distances.iter_mut().for_each(|d| *d = rng.random_range(50.0..100.0));
    let mut topo = spec.topology();
    let gains = sample_channel_gains(&topo, &env).unwrap();
    topo.set_gains(&gains).unwrap();
    (topo, env)
}

fn c9_sca_correctness() -> Check {
    // (a) tangency at the incumbent of the default topology
    let (topo, env) = NetworkSpec::default().instantiate(0).map_err(|e| e.to_string())?;
    let start = initialize_feasible(&topo, &env).map_err(|e| e.to_string())?;
    let mut tangency: f64 = 0.0;
    for (d, n) in start.nodes().zip(topo.nodes()) {
        let bil = convexified_bilinear(d.slack, d.p, d.slack, d.p).map_err(|e| e.to_string())?;
        tangency = tangency.max((bil - d.slack * d.p).abs() / (d.slack * d.p));
        let rate = convexified_rate_lower(d.p, d.p, n.channel_gain, n.bandwidth, env.noise_density)
            .map_err(|e| e.to_string())?;
        let exact = (d.p * n.channel_gain / (n.bandwidth * env.noise_density)).ln_1p();
        tangency = tangency.max((rate - exact).abs() / exact);
    }

    // (b) sampled majorization and minorization
    let mut rng = rng_from(9, &[1]);
    let mut sample_violations = 0;
    let (g, b, n0) = (1e-9, 20e6, dbm_to_watts(-174.0));
    for _ in 0..10_000 {
        let (x, p, xi, pi) = (
            rng.random_range(1e-4..1.0),
            rng.random_range(1e-4..0.5),
            rng.random_range(1e-4..1.0),
            rng.random_range(1e-4..0.5),
        );
        let upper = convexified_bilinear(x, p, xi, pi).map_err(|e| e.to_string())?;
        if upper < x * p * (1.0 - 1e-15) {
            sample_violations += 1;
        }
        let lower = convexified_rate_lower(p, pi, g, b, n0).map_err(|e| e.to_string())?;
        let exact = (p * g / (b * n0)).ln_1p();
        if lower > exact * (1.0 + 1e-15) {
            sample_violations += 1;
        }
    }

    // (c), (d) descent and feasibility on random instances
    let cfg = SolverConfig::default();
    let mut solved = 0;
    let mut non_monotone = 0;
    let mut worst_violation: f64 = 0.0;
    for seed in 0.. {
        if solved == 20 || seed == 200 {
            break;
        }
        let (topo, env) = random_instance(seed);
        let Ok(state) = run_alternating_sca(&topo, &env, &cfg) else { continue };
        solved += 1;
        non_monotone += state.history.windows(2).filter(|w| w[1] > w[0] + 1e-9).count();
        worst_violation = worst_violation.max(state.violations.iter().copied().fold(f64::MIN, f64::max));
        let true_obj = objective(&topo, &env, &state.point).map_err(|e| e.to_string())?;
        if (true_obj - state.objective).abs() > 1e-12 * true_obj {
            return Err(format!("seed {seed}: reported objective differs from the true latency"));
        }
    }
    ensure(
        tangency <= 1e-12 && sample_violations == 0 && solved == 20 && non_monotone == 0 && worst_violation <= 1e-6,
        format!(
            "tangency {tangency:.2e}; 10^4 samples, {sample_violations} violations; {solved} instances, \
             {non_monotone} increases, max violation {worst_violation:.2e}"
        ),
    )
}

fn c10_grid_gap() -> Check {
    let start = Instant::now();
    let spec = NetworkSpec { relays_per_route: vec![1], ..NetworkSpec::default() };
    let cfg = SolverConfig::default();
    let mut worst: f64 = f64::MIN;
    for seed in 0..10 {
        let (topo, env) = spec.instantiate(seed).map_err(|e| e.to_string())?;
        let sca = run_alternating_sca(&topo, &env, &cfg).map_err(|e| e.to_string())?;
        let grid = grid_search_oracle(&topo, &env, 400).map_err(|e| e.to_string())?;
        worst = worst.max(sca.objective / grid.objective - 1.0);
    }
    let detail = format!("10 seeds, worst SCA/grid - 1 = {:.4}%", 100.0 * worst);
    ensure(worst <= 0.02, detail.clone())?;
    within(start.elapsed(), Duration::from_secs(5 * 60), detail)
}

fn c11_baselines() -> Check {
    let cfg = training_config();
    let seeds: Vec<u64> = (0..20).collect();
    let rows = compare_baselines(&cfg, &seeds).map_err(|e| e.to_string())?;
    let dominated = rows.iter().filter(|r| r.joint_s <= r.leaf_only_s && r.joint_s <= r.relay_only_s).count();
    let (leaf, relay) = mean_reductions(&rows);
    ensure(
        dominated == rows.len() && leaf > 0.0 && relay > 0.0,
        format!(
            "{dominated}/20 seeds dominate both; mean reduction {:.2}% vs leaf-only, {:.2}% vs relay-only \
             (reported elsewhere: 19.79% and 45.33%)",
            100.0 * leaf,
            100.0 * relay
        ),
    )
}

/// Relative slack for the sweep comparison: the 12 significant digits the
/// metrics are reported with. Where a budget stops binding the optimum is
/// unchanged and reruns from a different start differ by round-off only.
const SWEEP_SLACK: f64 = 1e-12;

fn c12_sweeps() -> Check {
    let cfg = training_config();
    let seeds: Vec<u64> = (0..cfg.channel_seeds as u64).collect();
    let mut increases = Vec::new();
    let mut ties = 0;
    let mut runs = 0;
    for param in SweepParam::ALL {
        let rows = sweep(&cfg, param, &seeds).map_err(|e| e.to_string())?;
        runs += rows.len();
        for seed in &seeds {
            let series: Vec<_> = rows.iter().filter(|r| r.seed == *seed).collect();
            for w in series.windows(2) {
                ties += usize::from((w[1].objective_s / w[0].objective_s - 1.0).abs() <= SWEEP_SLACK);
                if w[1].objective_s > w[0].objective_s * (1.0 + SWEEP_SLACK) {
                    increases.push(format!(
                        "{} seed {seed} at {:.3e}: {:.6e} -> {:.6e} (relative {:.2e})",
                        param.name(),
                        w[1].value,
                        w[0].objective_s,
                        w[1].objective_s,
                        w[1].objective_s / w[0].objective_s - 1.0
                    ));
                }
            }
        }
    }
    ensure(
        increases.is_empty(),
        format!(
            "{runs} optimizations over 4 parameters x {} seeds; {ties} steps flat to 12 digits; increases: {increases:?}",
            seeds.len()
        ),
    )
}

const SMALL: &str = "\
dataset_path = synthetic
data.synthetic_hours = 720
fl.rounds = 2
fl.hidden_size = 6
fl.local_iters = 2
fl.probe_iters = 2
gradcheck.seeds = 2
reproduce.channel_seeds = 2
reproduce.sweep_points = 3
";

fn c13_determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("fedmeter-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg = dir.join("small.cfg");
    fs::write(&cfg, SMALL).map_err(|e| e.to_string())?;
    let run = |mode: &str, out: &Path, threads: &str| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_fedmeter"))
            .args([mode, "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()])
            .env("FEDMETER_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(o.status.success(), format!("{mode}: {}", String::from_utf8_lossy(&o.stderr))).map(|_| ())
    };
    let mut compared = 0;
    for mode in ["pfl", "fl", "standalone", "centralized", "optimize", "gradcheck", "reproduce"] {
        let (a, b) = (dir.join(format!("{mode}-a")), dir.join(format!("{mode}-b")));
        run(mode, &a, "1")?;
        run(mode, &b, "3")?;
        let files: Vec<(std::path::PathBuf, std::path::PathBuf)> = if a.is_dir() {
            let mut names: Vec<_> =
                fs::read_dir(&a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
            names.sort();
            names.into_iter().map(|n| (a.join(&n), b.join(&n))).collect()
        } else {
            vec![(a, b)]
        };
        for (x, y) in files {
            compared += 1;
            if fs::read(&x).map_err(|e| e.to_string())? != fs::read(&y).map_err(|e| e.to_string())? {
                return Err(format!("{} differs between runs", x.display()));
            }
        }
    }
    let _ = fs::remove_dir_all(&dir);
    Ok(format!("7 modes rerun with 1 and 3 workers, {compared} CSV files byte-identical"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("LSTM gradient fidelity", c1_gradient_fidelity),
        ("forward-pass oracle equivalence", c2_forward_oracle),
        ("meta-selection invariant", c3_meta_selection),
        ("FedAvg properties", c4_fedavg),
        ("centralized <= PFL <= standalone, 5-SM <= 2-SM", c5_loss_ordering),
        ("PFL beats fixed-rate FL", c6_pfl_vs_fl),
        ("convergence bound dominance", c7_theorem_bound),
        ("averaged gradient-noise variance", c8_variance),
        ("SCA correctness", c9_sca_correctness),
        ("grid-oracle optimality gap", c10_grid_gap),
        ("joint optimization beats both baselines", c11_baselines),
        ("latency monotone in budgets", c12_sweeps),
        ("byte-identical reruns", c13_determinism),
    ];
    // Optional criterion numbers on the command line select a subset.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:7.1} s] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:7.1} s] {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all selected criteria passed");
}
