//! `levy-orthant` — batch pipeline for orthant-hitting asymptotics.
//!
//! Three subcommands over a single JSON configuration:
//!
//! ```text
//! levy-orthant analyze  --config run.json   # condition certificate → report JSON
//! levy-orthant estimate --config run.json   # Monte Carlo estimates → CSV rows
//! levy-orthant fit      --config run.json   # A₀ regression from the CSV → fit JSON
//! ```
//!
//! Exit status: 0 on success, 2 when `require_conditions` is set and the
//! certificate fails, 1 on any error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use levy_orthant::cli::{run_analyze, run_estimate, run_fit, RunConfig};
use levy_orthant::sim::with_workers;

#[derive(Parser)]
#[command(
    name = "levy-orthant",
    version,
    about = "Hitting-probability asymptotics for multivariate Lévy processes with negative drift"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the condition certificate and write the report JSON.
    Analyze(Common),
    /// Run the configured estimators over the s grid, appending CSV rows.
    Estimate(Common),
    /// Fit the asymptotic constant from the estimates CSV.
    Fit(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (falls back to LEVY_ORTHANT_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Treat an undecided non-lattice/full-dimensionality condition as holding.
    #[arg(long = "override-c1")]
    override_c1: bool,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    std::process::exit(dispatch(cli));
}

fn dispatch(cli: Cli) -> i32 {
    let (common, run): (&Common, fn(&RunConfig) -> levy_orthant::Result<i32>) =
        match &cli.command {
            Command::Analyze(c) => (c, run_analyze),
            Command::Estimate(c) => (c, run_estimate),
            Command::Fit(c) => (c, run_fit),
        };

    let mut cfg = match RunConfig::from_path(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if common.override_c1 {
        cfg.flags.assume_c1 = true;
    }
    let workers = common.workers.or_else(|| {
        std::env::var("LEVY_ORTHANT_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });

    match with_workers(workers, || run(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
