mod commands;
mod manifest;
mod svg;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{DgmArgs, EvalArgs, GenArgs, KstatsArgs, LossArgs, OptimizeArgs};

/// Topological losses, diagrams and generative metrics for multi-class cell layouts.
#[derive(Debug, Parser)]
#[command(name = "topocell", version)]
pub struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Outputs do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Homology dimensions, e.g. `1` or `0,1`. Defaults depend on the command.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dims: Option<Vec<u8>>,
    /// Add wall-clock time to manifests (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Persistence diagram of a layout or scalar field.
    Dgm(DgmArgs),
    /// Set-level metrics between a reference and a synthetic directory.
    Eval(EvalArgs),
    /// Loss breakdown of a candidate layout against a target.
    Loss(LossArgs),
    /// Gradient descent of a layout toward a target's topology.
    Optimize(OptimizeArgs),
    /// Generate synthetic layouts.
    Gen(GenArgs),
    /// Ripley K discrepancy tests between paired directories.
    Kstats(KstatsArgs),
}

/// Exit code for an error chain: 1 for I/O, 3 for numerical failures, 2 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<topocell::Error>() {
            return if e.is_io() {
                1
            } else if e.is_numerical() {
                3
            } else {
                2
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
