use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rann::cli::{resolve, run, Command, Overrides};

#[derive(Parser)]
#[command(name = "rann", version, about = "Random-feature collocation solver for steady neutron transport")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Train on a problem and write the scalar flux and a run report.
    Solve(Flags),
    /// Discrete-ordinates reference solution.
    Baseline(Flags),
    /// Manufactured-solution and graph-norm suites.
    Verify(Flags),
    /// Relative l2 and pointwise errors between two flux CSV files.
    Compare(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Apply the `[desk]` scale-down overrides.
    #[arg(long)]
    desk: bool,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    predicted: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Baseline(f) => (Command::Baseline, f),
        Sub::Verify(f) => (Command::Verify, f),
        Sub::Compare(f) => (Command::Compare, f),
    };
    let text = match &flags.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let overrides = Overrides {
        problem: flags.problem,
        output: flags.output,
        seed: flags.seed,
        desk: flags.desk,
        reference: flags.reference,
        predicted: flags.predicted,
    };
    let config = match resolve(command, &text, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: verification failed; see {}", config.output.join("report.json").display());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
