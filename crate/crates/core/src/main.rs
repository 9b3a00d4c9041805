use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lgt_core::expcli::{cmd_optimize, cmd_report, cmd_simulate, cmd_vne_scan, exit_code, ExperimentConfig, RunContext};
use lgt_core::{Error, Result};

#[derive(Parser)]
#[command(name = "lgt", version, about = "Trotterized Z2 gauge Fermi-Hubbard circuits: compile, scan, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimizer comparison and gbo/vne block compilation.
    Optimize(Common),
    /// Entropy-profile depth scan of the hopping template family.
    VneScan(Common),
    /// Noisy χ trajectories for each variant, γ and seed.
    Simulate(Common),
    /// Two-qubit gate cost per Trotter step.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(cli: Cli) -> Result<()> {
    let (common, f): (&Common, fn(&RunContext) -> Result<_>) = match &cli.command {
        Command::Optimize(c) => (c, cmd_optimize),
        Command::VneScan(c) => (c, cmd_vne_scan),
        Command::Simulate(c) => (c, cmd_simulate),
        Command::Report(c) => (c, cmd_report),
    };
    let config = ExperimentConfig::load(&common.config)?;
    let mut ctx = RunContext::new(config, &common.out, common.seed);
    ctx.config_path = Some(common.config.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.jobs {
        if n == 0 {
            return Err(Error::Validation("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Validation(e.to_string()))?;
    let manifest = pool.install(|| f(&ctx))?;
    for name in &manifest.outputs {
        println!("{}", ctx.out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lgt: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
