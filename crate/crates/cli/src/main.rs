use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msavg_cli::config::Scale;
use msavg_cli::exit::{CliResult, Failure};
use msavg_cli::{fit, simulate, verify};

/// Mallows and mean-shift Mallows model averaging.
#[derive(Parser)]
#[command(name = "msavg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit MMA and MSA weights to a CSV dataset (first column y, then x_1..x_p).
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Nested model sizes, e.g. 1,2,4.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Error variance for the penalty; defaults to the largest model's estimate.
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte Carlo risk comparison.
    Simulate {
        /// Flat key = value file; missing keys take the default grid.
        #[arg(long)]
        config: PathBuf,
        /// 1000 iterations per cell.
        #[arg(long, conflicts_with = "desk_scale")]
        paper_scale: bool,
        /// 200 iterations per cell.
        #[arg(long)]
        desk_scale: bool,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write replicate 0 of every cell as a CSV dataset.
        #[arg(long)]
        export_data: bool,
    },
    /// Run the invariant suites; exit status 0 only if all pass.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, hide = true)]
        solver_tol: Option<f64>,
    },
}

/// `MSAVG_THREADS` caps the worker pool.
fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("MSAVG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::usage(anyhow::anyhow!("MSAVG_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::usage)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit { data, k, sigma2, out } => fit::run(fit::FitArgs { data: &data, k, sigma2, out: &out }),
        Command::Simulate { config, paper_scale, desk_scale, out, seed, export_data } => {
            let scale = match (paper_scale, desk_scale) {
                (true, _) => Some(Scale::Paper),
                (_, true) => Some(Scale::Desk),
                _ => None,
            };
            simulate::run(simulate::SimulateArgs { config: &config, scale, out: &out, seed, export_data })
        }
        Command::Verify { suite, seed, solver_tol } => verify::run(suite.as_deref(), solver_tol, seed),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("msavg: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
