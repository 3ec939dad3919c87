use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use switchsense_cli::{commands, CliError, Outcome, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "switchsense", version, about = "Order-switched distributed sensing: bounds, oracles and WVA readout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantum Cramér-Rao bounds for every strategy over an N range.
    QcrbSweep(Common),
    /// Cross-check closed forms against grid oracles; exit 1 on any failure.
    OracleVerify(Common),
    /// Synthetic SNR sweep, per-N fits and the scaling-law fit.
    ReproduceExperiment(Common),
    /// Single-point weak-value-amplification chain.
    WvaSim(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, env = "SWITCHSENSE_THREADS")]
    threads: Option<usize>,
}

type CommandFn = fn(&RunConfig, &Path) -> Result<Outcome, CliError>;

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (common, cmd): (&Common, CommandFn) = match &cli.command {
        Command::QcrbSweep(c) => (c, commands::qcrb_sweep),
        Command::OracleVerify(c) => (c, commands::oracle_verify),
        Command::ReproduceExperiment(c) => (c, commands::reproduce_experiment),
        Command::WvaSim(c) => (c, commands::wva_sim),
    };
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    cmd(&cfg, &common.out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
