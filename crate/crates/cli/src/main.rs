//! `vstat`: closed-form analyses, spectrum solves, word-counting comparisons
//! and Monte Carlo runs for V-statistic entropy spectra.

mod analyze;
mod compare;
mod config;
mod output;
mod simulate;
mod spectrum;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use output::LogBase;

/// Failures that map to a dedicated exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    EmptyFiber(String),
    #[error("{0}")]
    Violation(String),
}

#[derive(Debug, Parser)]
#[command(name = "vstat", version, about = "Entropy spectra of V-statistics on the full shift")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Logarithm base of printed entropies: `e`, `2`, `10` or any b > 0, b != 1.
    #[arg(long, global = true)]
    log_base: Option<LogBase>,

    /// TOML file with defaults; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrum of `A(x) = scale (x - a)(x - b)`.
    AnalyzeQuadratic(analyze::QuadraticArgs),
    /// Spectrum of `A(x) = scale (x - a)(x - b)(x - c)`.
    AnalyzeCubic(analyze::CubicArgs),
    /// Solve the variational problem for a kernel file.
    Spectrum(spectrum::SpectrumArgs),
    /// Monte Carlo convergence of V and U statistics.
    Simulate(simulate::SimulateArgs),
    /// Word-counting estimate against the closed form or the solver.
    OracleCompare(compare::CompareArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(b) = cli.log_base {
        cfg.log_base = b;
    }
    match &cli.command {
        Some(Command::AnalyzeQuadratic(a)) => a.common.apply(&mut cfg),
        Some(Command::AnalyzeCubic(a)) => a.common.apply(&mut cfg),
        Some(Command::Spectrum(a)) => a.apply(&mut cfg),
        Some(Command::Simulate(a)) => a.apply(&mut cfg),
        Some(Command::OracleCompare(a)) => a.apply(&mut cfg),
        None => {}
    }
    if cli.dump_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    }
    match cli.command {
        Some(Command::AnalyzeQuadratic(a)) => analyze::quadratic(&a, &cfg),
        Some(Command::AnalyzeCubic(a)) => analyze::cubic(&a, &cfg),
        Some(Command::Spectrum(a)) => spectrum::run(&a, &cfg),
        Some(Command::Simulate(a)) => simulate::run(&a, &cfg),
        Some(Command::OracleCompare(a)) => compare::run(&a, &cfg),
        None => Err(CliError::Invalid("no subcommand given (see --help)".into()).into()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Invalid(_) => 2,
                CliError::EmptyFiber(_) => 3,
                CliError::Violation(_) => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<vstat::Error>() {
            return match e {
                vstat::Error::EmptyFiber { .. } => 3,
                vstat::Error::Input(_)
                | vstat::Error::Degenerate(_)
                | vstat::Error::UnsupportedForm(_)
                | vstat::Error::Precondition(_)
                | vstat::Error::Ambiguous { .. }
                | vstat::Error::Resource { .. } => 2,
                vstat::Error::Invariant(_) | vstat::Error::Solver(_) => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
