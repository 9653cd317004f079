use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod files;
mod simulate;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "mhcouple", version, about = "Decompose, verify and simulate couplings of Metropolis-Hastings kernels")]
struct Cli {
    /// Print nothing on success.
    #[arg(long, global = true, conflicts_with = "json")]
    quiet: bool,
    /// Print a JSON summary instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a transition coupling into a proposal coupling and an acceptance coupling.
    Decompose(DecomposeArgs),
    /// Decide whether a transition coupling is maximal.
    VerifyMaximal(VerifyArgs),
    /// Write the maximal coupling of two transition rows.
    BuildMaximal(BuildArgs),
    /// Simulate coupled chains and record meeting times.
    Simulate(simulate::SimulateArgs),
    /// Reproduce the three-state example where no maximal proposal coupling works.
    CertifyNonmax,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    coupling: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Enumerate every rectangle regardless of the state count.
    #[arg(long)]
    check_exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Via {
    Conditions,
    Hahn,
    Both,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    coupling: PathBuf,
    #[arg(long, value_enum, default_value_t = Via::Both)]
    via: Via,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Residual {
    Product,
    NorthWest,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    problem: PathBuf,
    /// State labels `x,y`.
    #[arg(long)]
    pair: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Residual::Product)]
    residual: Residual,
}

/// What a command reports: human text, a JSON summary and the exit code.
pub struct Report {
    pub text: String,
    pub json: serde_json::Value,
    pub code: u8,
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Decompose(a) => commands::decompose(&a.problem, &a.coupling, &a.out, a.check_exhaustive),
        Command::VerifyMaximal(a) => commands::verify_maximal(&a.problem, &a.coupling, a.via),
        Command::BuildMaximal(a) => commands::build_maximal(&a.problem, &a.pair, &a.out, a.residual),
        Command::Simulate(a) => simulate::run(a),
        Command::CertifyNonmax => commands::certify_nonmax(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("summary serializes"));
            } else if !cli.quiet {
                print!("{}", report.text);
            }
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("mhcouple: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
