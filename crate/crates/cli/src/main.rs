//! `palm`: file-driven runner for universe generation, portfolio
//! construction, method comparison and guarantee audits.
//!
//! Exit status is 0 on success, 1 when an audit fails and 2 on invalid input.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Overrides;
use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "palm",
    version,
    about = "Policy portfolios over linear scalarizations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded policy universe
    GenUniverse(Common),
    /// Build one portfolio and write it with its metrics
    Run(Common),
    /// Compare PALM against the uniform and random baselines
    Compare(Common),
    /// Audit the approximation guarantees over a sweep
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the probe count
    #[arg(long)]
    probes: Option<usize>,
    /// Override the command's primary seed
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            probes: self.probes,
            seed: self.seed,
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenUniverse(c) => {
            let path = commands::gen_universe(&c.config, &c.overrides())?;
            println!("wrote {}", path.display());
        }
        Command::Run(c) => {
            for path in commands::run(&c.config, &c.overrides())? {
                println!("wrote {}", path.display());
            }
        }
        Command::Compare(c) => {
            for path in commands::compare(&c.config, &c.overrides())? {
                println!("wrote {}", path.display());
            }
        }
        Command::Verify(c) => {
            let (path, report) = commands::verify(&c.config, &c.overrides())?;
            println!("wrote {}", path.display());
            let failed: Vec<String> = report
                .records
                .iter()
                .filter(|r| !r.passed)
                .map(|r| {
                    let witness = r
                        .witness
                        .as_ref()
                        .map(|w| format!(" witness {:?}", w.coords()))
                        .unwrap_or_default();
                    format!("{} [{}]: {}{}", r.label, r.check, r.detail, witness)
                })
                .collect();
            if !failed.is_empty() {
                return Err(CliError::Audit(failed.join("\n")));
            }
            println!("{} checks passed", report.checks);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
