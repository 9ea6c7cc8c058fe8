use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use marginlab::config::parse_config;
use marginlab::sweep::run_sweep;
use marginlab::{CliError, CliResult};

/// Margin-condition risk laboratory: run an experiment config and emit CSV.
#[derive(Parser, Debug)]
#[command(name = "marginlab", version, about)]
struct Args {
    /// Path to the experiment configuration file.
    config: PathBuf,

    /// Output CSV path (overrides the config's `out` key; stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread count (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: &Args) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    let table = match args.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_sweep(&cfg))?
        }
        None => run_sweep(&cfg)?,
    };
    match &cfg.out {
        Some(path) => table.write_csv(path)?,
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
