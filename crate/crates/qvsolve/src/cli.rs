use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{self, ApproxKind, FitArgs, Output, SimulateArgs};
use crate::error::{CliError, Result};
use crate::json::render;

/// Steady-state solver for the PH/MSP/1 queue with a single exponential vacation.
#[derive(Debug, Parser)]
#[command(name = "qvsolve", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a model and print the per-level tables.
    Solve {
        model: PathBuf,
        /// Write the machine-readable result document here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the result document instead of the tables.
        #[arg(long)]
        json: bool,
    },
    /// Simulate a model and compare with the solver.
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        arrivals: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Arrivals discarded before measuring (default: 10% of --arrivals).
        #[arg(long)]
        warmup: Option<u64>,
        /// Independent replications, run in parallel.
        #[arg(long, default_value_t = 1)]
        replications: usize,
        #[arg(long, default_value_t = 32)]
        batches: usize,
        /// Restart the service phase of a dormant server (diagnostic).
        #[arg(long)]
        restart_phase: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// List the characteristic roots inside the unit disk.
    Roots {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Few-root tail approximations.
    Approx {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Tail)]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Reference load for `--mode near-rho`.
        #[arg(long)]
        rho1: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Fit an acyclic PH arrival law to a moment target.
    FitPh {
        #[arg(long, value_enum, default_value_t = Target::Lognormal)]
        target: Target,
        #[arg(long, default_value_t = 1.04)]
        shape: f64,
        #[arg(long, default_value_t = 0.215)]
        scale: f64,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 20)]
        moments: usize,
        /// Comma-separated weights of the first moments in the alpha fit.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        /// Emit a complete model file with this file's arrival section replaced.
        #[arg(long)]
        into: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Tail,
    Heavy,
    Light,
    NearRho,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Lognormal,
}

/// Runs one command and returns what it prints plus where the document goes.
pub fn execute(cli: &Cli) -> Result<(Output, Option<PathBuf>, bool)> {
    Ok(match &cli.command {
        Command::Solve { model, out, json } => (commands::cmd_solve(model)?, out.clone(), *json),
        Command::Simulate { model, arrivals, seed, warmup, replications, batches, restart_phase, out, json } => {
            let args = SimulateArgs {
                path: model.clone(),
                arrivals: *arrivals,
                seed: *seed,
                warmup: *warmup,
                replications: *replications,
                batches: *batches,
                restart_phase: *restart_phase,
            };
            (commands::cmd_simulate(&args)?, out.clone(), *json)
        }
        Command::Roots { model, out, json } => (commands::cmd_roots(model)?, out.clone(), *json),
        Command::Approx { model, mode, order, eps, rho1, out, json } => {
            let kind = match mode {
                Mode::Tail => ApproxKind::Tail,
                Mode::Heavy => ApproxKind::Heavy,
                Mode::Light => ApproxKind::Light,
                Mode::NearRho => ApproxKind::NearRho(
                    rho1.ok_or_else(|| CliError::Usage("--mode near-rho needs --rho1".into()))?,
                ),
            };
            (commands::cmd_approx(model, kind, *order, *eps)?, out.clone(), *json)
        }
        Command::FitPh { target: Target::Lognormal, shape, scale, order, moments, weights, into, out, json } => {
            let args = FitArgs {
                shape: *shape,
                scale: *scale,
                order: *order,
                moments: *moments,
                weights: weights.clone(),
                into: into.clone(),
            };
            (commands::cmd_fit_ph(&args)?, out.clone(), *json)
        }
    })
}

/// Executes the command, writes its outputs and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(cli: &Cli) -> Result<()> {
    let (output, out, json) = execute(cli)?;
    let rendered = output.document.as_ref().map(render);
    if let (Some(path), Some(doc)) = (&out, &rendered) {
        std::fs::write(path, doc).map_err(|e| CliError::io(path, e))?;
    }
    let text = match (&rendered, json) {
        (Some(doc), true) => doc.as_str(),
        _ => output.stdout.as_str(),
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
    Ok(())
}
