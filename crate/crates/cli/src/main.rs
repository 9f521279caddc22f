//! `ndr`: batch driver for the dispersion relation solver.
//!
//! Exit codes: 0 all checks pass, 1 a verification check failed, 2 bad
//! input, 3 solver failure, 4 no closed-form oracle for a study.

mod analytic;
mod commands;
mod config;
mod error;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "ndr", version, about = "Solve and verify soliton and breather gas dispersion relations")]
struct Cli {
    /// Solver tolerance, overriding the config.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for the jittered probe lattice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write states.csv and report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-run the diagnostics on a stored states.csv.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Refinement study against the configured oracle.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Node counts of the ladder.
        #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
        ns: Vec<usize>,
    },
    /// Tabulate a closed-form density.
    Analytic {
        kind: AnalyticKind,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Box height.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        /// Semicircle radius.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Band endpoints on the imaginary axis, increasing.
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2")]
        bands: Vec<f64>,
        /// Bands symmetric about the real axis (even polynomial).
        #[arg(long)]
        even: bool,
        /// Grid points per band.
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
    /// Write the assembled kernel matrix and the nodes.
    DumpKernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnalyticKind {
    Semicircle,
    Box,
    BoundState,
    KdvMap,
}

fn init_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("NDR_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::input(format!("NDR_THREADS: expected a positive integer, got {value:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::input(format!("NDR_THREADS: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    init_threads()?;
    if let Some(t) = cli.tol {
        if !(t > 0.0) {
            return Err(CliError::input(format!("--tol: must be positive, got {t}")));
        }
    }
    match cli.command {
        Command::Solve { config, out } => commands::solve(&config, &out, cli.tol, cli.seed),
        Command::Verify { config, out } => commands::verify(&config, &out, cli.tol, cli.seed),
        Command::Converge { config, out, ns } => commands::converge(&config, &out, cli.tol, &ns),
        Command::DumpKernel { config, out } => commands::dump_kernel(&config, &out),
        Command::Analytic {
            kind,
            out,
            q,
            rho,
            bands,
            even,
            n,
        } => {
            let params = analytic::Params { q, rho, bands, even, n };
            match kind {
                AnalyticKind::Semicircle => analytic::semicircle(&out, &params),
                AnalyticKind::Box => analytic::box_density(&out, &params),
                AnalyticKind::BoundState => analytic::bound_state(&out, &params),
                AnalyticKind::KdvMap => analytic::kdv_map(&out, &params),
            }
            .map(|()| true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
