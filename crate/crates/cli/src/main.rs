//! `qtomo`: simulation campaigns, accuracy predictions, power-law fits and
//! true-state inspection for adaptive tomography.
//!
//! Exit status: 0 on success, 2 for configuration or input errors, 3 when an
//! internal invariant is violated.

mod analysis;
mod config;
mod error;
mod fit;
mod output;
mod simulate;
mod states;
mod theory;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::config::{CampaignConfig, RawConfig};
use crate::error::CliResult;
use crate::output::to_json;

#[derive(Parser)]
#[command(name = "qtomo", version, about = "Adaptive quantum state tomography simulator")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; each flag overrides the config key
/// of the same name.
#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// True-state kind, e.g. haar-pure, bures-mixed:9, appendix-rank:3.
    #[arg(long)]
    state: Option<String>,
    /// Factor dimensions, e.g. 3x3.
    #[arg(long)]
    split: Option<String>,
    /// Total dimension with two equal factors.
    #[arg(long)]
    dim: Option<String>,
    /// Protocol or comma-separated protocols (fr, gr, eigen, amub, fo).
    #[arg(long)]
    protocol: Option<String>,
    /// Estimator rank R_e, or `full`.
    #[arg(long)]
    rank: Option<String>,
    #[arg(long = "n-total")]
    n_total: Option<String>,
    /// Any other config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn raw(&self) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let flags = [
            ("seed", &self.seed),
            ("state", &self.state),
            ("split", &self.split),
            ("dim", &self.dim),
            ("protocols", &self.protocol),
            ("rank", &self.rank),
            ("n_total", &self.n_total),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        for pair in &self.set {
            raw.set_pair(pair)?;
        }
        Ok(raw)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo campaign and write trajectories, summary and manifest.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        runs: Option<String>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        jobs: Option<String>,
        /// Output directory [default: $QTOMO_OUT or ./qtomo-out].
        #[arg(long)]
        out: Option<String>,
    },
    /// Predict the infidelity distribution of a fixed measurement protocol.
    Theory {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of bases [default: 2(D + 1)].
        #[arg(long)]
        bases: Option<usize>,
        /// Which run's true state to use.
        #[arg(long = "run-id", default_value_t = 0)]
        run_id: u64,
    },
    /// Fit c N^a to a trajectory CSV (averaged over runs).
    Fit {
        /// CSV with columns run_id, N, d_b2.
        csv: PathBuf,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        /// d_B² levels for the reach-N table.
        #[arg(long = "threshold", default_values_t = [1e-2, 1e-3])]
        thresholds: Vec<f64>,
    },
    /// Print purity, negativity and eigenvalues of the true state.
    States {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "run-id", default_value_t = 0)]
        run_id: u64,
        /// Include the density matrix.
        #[arg(long)]
        matrix: bool,
    },
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate { config, runs, jobs, out } => {
            let mut raw = config.raw()?;
            for (key, value) in [("runs", runs), ("jobs", jobs), ("out", out)] {
                if let Some(v) = value {
                    raw.set(key, &v)?;
                }
            }
            let campaign = CampaignConfig::from_raw(&raw)?;
            let summary = simulate::simulate(&campaign)?;
            println!("wrote {}", campaign.out.display());
            for p in &summary.protocols {
                match &p.fit {
                    Some(f) => println!(
                        "{:>6}: d_B² ≈ ({:.3e} ± {:.1e}) N^({:.3} ± {:.3}), {} runs",
                        p.protocol, f.fit.c, f.fit.dc, f.fit.a, f.fit.da, p.runs
                    ),
                    None => println!("{:>6}: no fit ({})", p.protocol, p.fit_error.as_deref().unwrap_or("")),
                }
            }
        }
        Command::Theory { config, bases, run_id } => {
            println!("{}", to_json(&theory::theory(&config.raw()?, bases, run_id)?)?);
        }
        Command::Fit { csv, min, max, thresholds } => {
            println!("{}", to_json(&fit::fit_csv(&csv, min, max, &thresholds)?)?);
        }
        Command::States { config, run_id, matrix } => {
            println!("{}", to_json(&states::states(&config.raw()?, run_id, matrix)?)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qtomo: {e}");
            e.exit_code()
        }
    }
}
