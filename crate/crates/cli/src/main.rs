//! `bridge`: drive the quantum-to-classical lattice correspondence
//! from the command line.
//!
//! Subcommands: `map`, `exact`, `eval`, `mc`, `compare`, `propagate`,
//! `sweep`. All but `propagate` are driven by an `experiment/1` JSON
//! config; flags override individual settings. Exit codes: 2 for
//! validation failures, 3 for numeric trouble or exceeded caps, 4 for
//! I/O problems. The `BRIDGE_MAX_SPINS` environment variable raises the
//! enumeration cap (clamped to 28 spins).

mod commands;
mod config;

use std::path::PathBuf;

use bridge_core::{Error, Module, Result};
use clap::{Args, Parser, Subcommand};

use commands::{Ctx, PropagateRequest};
use config::{ExperimentConfig, MethodChoice, OutputFormat};

#[derive(Parser)]
#[command(
    name = "bridge",
    version,
    about = "Quantum spin chains as classical Ising lattices: map, evaluate, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the canonical classical lattice JSON for each slice count
    Map(CommonArgs),
    /// Quantum reference: correlators, entanglement, free energy
    Exact(CommonArgs),
    /// Evaluate lattice observables exactly, per slice count and method
    Eval(CommonArgs),
    /// Metropolis estimates with jackknife errors and per-bin traces
    Mc(CommonArgs),
    /// Side-by-side table: classical routes against the quantum reference
    Compare(CommonArgs),
    /// Single-qubit transfer chain against the exact propagator
    Propagate(PropagateArgs),
    /// Entanglement measures across a B/J grid, quantum and classical
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config JSON (schema experiment/1)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (overrides output_dir from the config)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Monte Carlo seed (overrides the config's mc.seed)
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Table format: csv or json (overrides the config)
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Trotter slice counts, comma separated (overrides trotter_n)
    #[arg(long, value_name = "LIST")]
    n: Option<String>,
    /// Methods, comma separated (overrides the config's method list)
    #[arg(long, value_name = "LIST")]
    method: Option<String>,
}

#[derive(Args)]
struct PropagateArgs {
    /// Field E in H = E sz + Delta sx
    #[arg(long, value_name = "E", allow_hyphen_values = true)]
    e_field: f64,
    /// Transverse term Delta (must be nonzero)
    #[arg(long, value_name = "DELTA", allow_hyphen_values = true)]
    delta: f64,
    /// Evolution time
    #[arg(long, value_name = "T", allow_hyphen_values = true)]
    t: f64,
    /// Slice counts, comma separated
    #[arg(long, value_name = "LIST")]
    m: String,
    /// Also check the thermal continuation at this inverse temperature
    #[arg(long, value_name = "BETA")]
    beta: Option<f64>,
    /// Output directory (default: current directory)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Table format: csv or json (default: csv)
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
}

fn parse_usize_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|piece| {
            piece.trim().parse::<usize>().map_err(|_| {
                Error::invalid(Module::Cli, format!("{what} entry '{piece}' is not a count"))
            })
        })
        .collect()
}

fn parse_method_list(text: &str) -> Result<Vec<MethodChoice>> {
    text.split(',').map(|piece| MethodChoice::parse(piece.trim())).collect()
}

/// Loads the config, applies flag overrides, revalidates, and prepares
/// the output directory.
fn build_ctx(args: &CommonArgs) -> Result<Ctx> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(list) = &args.n {
        config.trotter_n = parse_usize_list(list, "--n")?;
    }
    if let Some(list) = &args.method {
        config.methods = parse_method_list(list)?;
        // Selecting methods without mc leaves the mc section unused;
        // drop it so the override stays self-consistent.
        if !config.methods.contains(&MethodChoice::Mc) {
            config.mc = None;
        }
    }
    if let Some(seed) = args.seed {
        match config.mc.as_mut() {
            Some(mc) => mc.seed = seed,
            None => {
                return Err(Error::invalid(
                    Module::Cli,
                    "--seed was given but the config has no mc section",
                ))
            }
        }
    }
    if let Some(format) = &args.format {
        config.format = OutputFormat::parse(format)?;
    }
    config.validate()?;
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(Module::Cli, e))?;
    Ok(Ctx { config, out_dir })
}

fn build_propagate(args: &PropagateArgs) -> Result<PropagateRequest> {
    let m_list = parse_usize_list(&args.m, "--m")?;
    if m_list.iter().any(|&m| m < 1) {
        return Err(Error::invalid(Module::Cli, "--m entries must be >= 1"));
    }
    let format = match &args.format {
        Some(text) => OutputFormat::parse(text)?,
        None => OutputFormat::Csv,
    };
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(Module::Cli, e))?;
    Ok(PropagateRequest {
        e_field: args.e_field,
        delta: args.delta,
        t: args.t,
        m_list,
        beta: args.beta,
        out_dir,
        format,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map(args) => commands::cmd_map(&build_ctx(&args)?),
        Command::Exact(args) => commands::cmd_exact(&build_ctx(&args)?),
        Command::Eval(args) => commands::cmd_eval(&build_ctx(&args)?),
        Command::Mc(args) => commands::cmd_mc(&build_ctx(&args)?),
        Command::Compare(args) => commands::cmd_compare(&build_ctx(&args)?),
        Command::Propagate(args) => commands::cmd_propagate(&build_propagate(&args)?),
        Command::Sweep(args) => commands::cmd_sweep(&build_ctx(&args)?),
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
