//! Command-line front end: `stiffhs <command> --config <path> --out <dir>`.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stiffhs::cli::{dispatch, parse_scenario, Command, DispatchOptions};

#[derive(Parser)]
#[command(
    name = "stiffhs",
    version,
    about = "Stiff-pressure-limit simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; one subdirectory per run is created inside.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's stiffness list, e.g. 10,20,40,80.
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<f64>>,
    /// Worker threads for per-m parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the stiff density equation and write snapshots + diagnostics.
    PmeRun(CommonArgs),
    /// Run the free boundary reference flow and write the front series.
    FrontRun(CommonArgs),
    /// Sweep the stiffness list against the front reference.
    Sweep(CommonArgs),
    /// Construct and verify the explicit barriers.
    Barriers(CommonArgs),
    /// Contraction ratio series between two perturbed runs.
    Contraction(CommonArgs),
    /// 2D perimeter and boundary-band study.
    Perimeter(CommonArgs),
}

impl Cmd {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            Cmd::PmeRun(a) => (Command::PmeRun, a),
            Cmd::FrontRun(a) => (Command::FrontRun, a),
            Cmd::Sweep(a) => (Command::Sweep, a),
            Cmd::Barriers(a) => (Command::Barriers, a),
            Cmd::Contraction(a) => (Command::Contraction, a),
            Cmd::Perimeter(a) => (Command::Perimeter, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();

    let (scenario, warnings) = match parse_scenario(&args.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let opts = DispatchOptions { m_list: args.m_list.clone(), threads: args.threads };
    match dispatch(command, &scenario, &args.out, &opts) {
        Ok(run_dir) => {
            println!("{}", run_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
