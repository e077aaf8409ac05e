use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fedmeter::run::{execute, load_config, thread_count};
use fedmeter::{CliError, Mode};

/// Personalized federated load forecasting and multi-hop latency experiments.
#[derive(Parser, Debug)]
#[command(name = "fedmeter", version)]
struct Args {
    /// pfl, fl, standalone, centralized, optimize, gradcheck or reproduce
    mode: Mode,
    /// `key = value` experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` from the config
    #[arg(long)]
    seed: Option<u64>,
    /// CSV file, or output directory for `reproduce`
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> Result<String, CliError> {
    let cfg = load_config(&args.config, args.mode, args.seed, args.out.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(args.mode, &cfg))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
