use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mmgpe::cli::{run, RunConfig, RunOptions};

/// Adaptive finite element solver for Gross-Pitaevskii ground states,
/// excited states and two-component condensates.
#[derive(Debug, Parser)]
#[command(name = "solver", version)]
struct Args {
    /// `key = value` configuration file.
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
    /// Let all components share one adaptively refined mesh.
    #[arg(long)]
    single_mesh: bool,
}

/// Reads `SOLVER_THREADS`: unset or 0 means sequential assembly.
fn threads() -> Result<usize, String> {
    match std::env::var("SOLVER_THREADS") {
        Err(_) => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| format!("SOLVER_THREADS must be a non-negative integer, got `{v}`")),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match RunConfig::from_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.dump_config {
        print!("{}", cfg.dump());
        return ExitCode::SUCCESS;
    }
    let n = match threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }
    let opts = RunOptions { out_dir: args.out, single_mesh: args.single_mesh, parallel: n > 0 };
    match run(&cfg, &opts) {
        Ok(rows) => {
            for r in rows {
                println!("{:<8} E = {:.10}  mu = {:.10}  dofs = {}", r.label, r.energy, r.mu, r.dofs);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
