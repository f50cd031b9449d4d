use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use precarity_core::config::load_config;
use precarity_core::report::compare;
use precarity_core::runner::{execute, load_report};

/// Simulate household precarity under algorithmic decisions.
#[derive(Debug, Parser)]
#[command(name = "precarity", version)]
struct Args {
    /// Scenario config (TOML).
    #[arg(long, value_name = "FILE", required_unless_present = "compare")]
    config: Option<PathBuf>,

    /// Output directory for reports.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,

    /// Override the seed from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Validate the config and data files, then exit without simulating.
    #[arg(long)]
    dry_run: bool,

    /// Run scenarios concurrently.
    #[arg(long)]
    parallel_scenarios: bool,

    /// Compare two report files (A minus B) and print the deltas as CSV.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with_all = ["config", "dry_run"])]
    compare: Option<Vec<PathBuf>>,
}

fn run(args: Args) -> Result<()> {
    if let Some(paths) = args.compare {
        let a = load_report(&paths[0])?;
        let b = load_report(&paths[1])?;
        print!("{}", compare(&a, &b)?.to_csv());
        return Ok(());
    }
    let Some(config) = args.config else {
        bail!("--config is required");
    };
    let resolved = load_config(&config, args.seed).with_context(|| format!("loading {}", config.display()))?;
    if args.dry_run {
        for s in &resolved.scenarios {
            println!(
                "{}: {} agents, {} households, {} rounds, quantile {}, {}",
                s.name,
                s.config.agent_model.as_str(),
                s.config.population.n,
                s.config.rounds,
                s.config.acceptance_quantile,
                s.config.intervention.kind.describe()
            );
        }
        println!("config ok (digest {})", resolved.digest);
        return Ok(());
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let written = execute(&resolved, &args.out, args.parallel_scenarios)?;
    for path in written {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PRECARITY_LOG", "warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
