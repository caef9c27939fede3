//! Command-line front end: runs one experiment from a config file and emits
//! its CSV / summary / plot outputs. Exit code 0 iff every invoked check
//! passed.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stokeskernel::experiments::{
    emit_outputs, run_blowup, run_identity_suite, run_l1_study, run_maxmod, run_region_bounds,
    ExperimentReport,
};
use stokeskernel::KernelConfig;

#[derive(Parser)]
#[command(
    name = "stokeskernel",
    about = "Half-space Stokes Poisson-kernel experiments: identity suite, L^1 study, region bounds, blow-up sweep, boundedness contrast"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also emit an SVG chart per sweep.
    #[arg(long, global = true)]
    plot: bool,
    /// Seed for the pseudo-random sample points.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel identity suite (trace, commutator, time integral, convolution).
    Identities,
    /// Truncated L^1 flatness of the velocity kernel blocks across heights.
    L1,
    /// Four-region envelope fits and the aggregate support-ball estimate.
    Bounds,
    /// Logarithmic blow-up sweep of the counterexample data.
    Blowup,
    /// Boundedness contrast between raw and time-mollified data.
    Maxmod,
}

fn run(cli: &Cli) -> stokeskernel::Result<ExperimentReport> {
    let cfg = match &cli.config {
        Some(path) => KernelConfig::from_file(path)?,
        None => {
            return Err(stokeskernel::Error::Config(
                "--config <path> is required".into(),
            ))
        }
    };
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Identities => run_identity_suite(&cfg, seed),
        Command::L1 => run_l1_study(&cfg),
        Command::Bounds => run_region_bounds(&cfg),
        Command::Blowup => run_blowup(&cfg),
        Command::Maxmod => run_maxmod(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    match emit_outputs(&report, &out_dir, cli.plot) {
        Ok(paths) => {
            for p in &paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error writing outputs: {e}");
            return ExitCode::from(2);
        }
    }
    println!(
        "{}: {}",
        report.name,
        if report.pass { "PASS" } else { "FAIL" }
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
