use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use projband::Exec;

mod commands;
mod config;
mod error;
mod output;

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "projband", version, about = "Projection density estimates, confidence bands and Gaussian sup-tail tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a projection estimate to a sample.
    Estimate {
        /// Sample file, overriding the config's `input`.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Fit an estimate and build its confidence band.
    Band {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Sweep the remainder exponent over delta.
    ChiOpt,
    /// Monte Carlo sup-tail probabilities next to their asymptotics.
    McSup,
    /// Expected up-crossings by quadrature with a Monte Carlo check.
    Rice,
    /// Claw-density distribution or coverage study.
    Experiment,
}

fn init_threads(threads: usize) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<output::OutDir, CliError> {
    init_threads(cli.common.threads)?;
    let cfg = cli.common.config.as_deref();
    let seed = cli.common.seed;
    let out: &Path = &cli.common.out;
    let exec = Exec::default();
    match cli.command {
        Command::Estimate { input } => commands::estimate(config::load(cfg, seed)?, input, out),
        Command::Band { input } => commands::band(config::load(cfg, seed)?, input, out),
        Command::ChiOpt => commands::chi_opt(config::load(cfg, seed)?, out, exec),
        Command::McSup => commands::mc_sup(config::load(cfg, seed)?, out, exec),
        Command::Rice => commands::rice(config::load(cfg, seed)?, out, exec),
        Command::Experiment => commands::experiment(config::load(cfg, seed)?, out, exec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(dir) => {
            for p in dir.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("projband: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
