mod check;
mod commands;
mod config;
mod oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use check::{run_check, SuiteName};
use commands::{constants_report, render_constants, run_simulate, Failure};
use config::{parse_config, SimConfig};

/// Momentum-lattice Dirac-Fock vacuum dynamics with classical nuclei.
#[derive(Debug, Parser)]
#[command(name = "bdfsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the coupled system and write diagnostics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a property suite; exits 2 on the first failing property.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: SuiteName,
    },
    /// Estimate the local-existence constants and admissible time.
    Constants {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<SimConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = load(&config)?;
            let summary = run_simulate(&cfg, &out)?;
            print!("{}", summary.render(&cfg));
        }
        Command::Check { config, suite } => {
            let cfg = load(&config)?;
            for p in run_check(&cfg, suite)? {
                println!("{}", p.line());
                if !p.pass {
                    return Err(Failure::Suite(format!("property failed: {}", p.name)));
                }
            }
        }
        Command::Constants { config } => {
            let cfg = load(&config)?;
            let report = constants_report(&cfg)?;
            print!("{}", render_constants(&cfg, &report)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
