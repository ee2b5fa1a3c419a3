//! `eplab`: experiment runner for the Euler-Poisson virial laboratory.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::run::Mode;

#[derive(Parser)]
#[command(name = "eplab", version, about = "Euler-Poisson virial laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write series.csv, summary.json and config.echo.
    Simulate { config: PathBuf },
    /// Slow-observer run that also checks the I margin and the integrated bound.
    VirialSlow { config: PathBuf },
    /// Fast-observer run that also checks the L margin and the integrated bound.
    VirialFast { config: PathBuf },
    /// Build a solitary profile and write profile.csv and report.json.
    Solitary {
        #[arg(long)]
        k: f64,
        #[arg(long)]
        c_over_sonic: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200.0)]
        length: f64,
        #[arg(long, default_value_t = 2048)]
        points: usize,
    },
    /// Randomized weighted-resolvent and elliptic-solver suite; JSON on stdout.
    PoissonTest {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration once per value of one key, in parallel.
    Sweep {
        #[arg(long)]
        vary: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_enum, default_value_t = SweepMode::Simulate)]
        mode: SweepMode,
        config: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SweepMode {
    Simulate,
    VirialSlow,
    VirialFast,
}

impl From<SweepMode> for Mode {
    fn from(m: SweepMode) -> Self {
        match m {
            SweepMode::Simulate => Mode::Simulate,
            SweepMode::VirialSlow => Mode::VirialSlow,
            SweepMode::VirialFast => Mode::VirialFast,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config } => commands::single(&config, Mode::Simulate),
        Command::VirialSlow { config } => commands::single(&config, Mode::VirialSlow),
        Command::VirialFast { config } => commands::single(&config, Mode::VirialFast),
        Command::Solitary {
            k,
            c_over_sonic,
            out,
            length,
            points,
        } => commands::solitary(k, c_over_sonic, &out, length, points),
        Command::PoissonTest { samples, seed, out } => commands::poisson_test(samples, seed, out.as_deref()),
        Command::Sweep {
            vary,
            values,
            mode,
            config,
        } => commands::sweep(&vary, &values, mode.into(), &config),
    };
    match result {
        Ok(commands::Status::Pass) => ExitCode::SUCCESS,
        Ok(commands::Status::Fail(reason)) => {
            eprintln!("check failed: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<commands::UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
