//! `spde`: batch experiment runner for the spectral simulator and its
//! verification harness.
//!
//! Exit codes: 0 when every check of the invoked command passes, 1 when a
//! check fails (or a run diverges), 2 on configuration or parameter errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_spde::Error;

use config::RawConfig;

#[derive(Parser)]
#[command(
    name = "spde",
    version,
    about = "Spectral Galerkin simulator and verification harness for stochastic hyperdissipative Navier-Stokes/Burgers dynamics"
)]
struct Cli {
    /// Configuration file (flat `key = value` lines, optional `[sections]`).
    /// Built-in desk-scale defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set delta=1.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Monte Carlo sample count (shorthand for `--set samples=N`).
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Stream seed (shorthand for `--set seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Time steps (shorthand for `--set steps=N`).
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Output directory (shorthand for `--set output_dir=DIR`).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker thread count; never affects numeric output, only wall time.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Randomized verification of the structural inequalities of the
    /// convection term with the computed constants.
    CheckAssumptions,
    /// Simulate trajectories and report pathwise energy-identity residuals.
    Simulate {
        /// Dump the first trajectory as CSV (step, s, mode_index, re, im).
        #[arg(long)]
        dump_path: bool,
    },
    /// Derivative estimation: stochastic-integral weight vs the
    /// common-random-number central difference (plus the closed form in
    /// linear mode).
    Bismut,
    /// Coupling-difference identity and change-of-measure checks.
    Coupling,
    /// Gradient, entropy-gradient, Harnack and exponential-moment bounds.
    Inequalities,
    /// Run the full acceptance suite; exit 0 iff every criterion passes.
    Accept,
    #[command(hide = true)]
    SampleLongrun,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::AssumptionViolated { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::defaults(),
    };
    let overrides: Vec<(String, String)> = cli
        .set
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::InvalidParameter {
                    name: "set".into(),
                    constraint: format!("expected KEY=VALUE, got `{kv}`"),
                })
        })
        .collect::<Result<_, _>>()?;
    raw.apply_overrides(&overrides)?;
    if let Some(v) = cli.samples {
        raw.set("samples", &v.to_string())?;
    }
    if let Some(v) = cli.seed {
        raw.set("seed", &v.to_string())?;
    }
    if let Some(v) = cli.steps {
        raw.set("steps", &v.to_string())?;
    }
    if let Some(v) = &cli.output_dir {
        raw.set("output_dir", &v.display().to_string())?;
    }
    let rc = raw.build()?;

    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter {
                name: "threads".into(),
                constraint: e.to_string(),
            })?;
    }

    match cli.command {
        Command::CheckAssumptions => commands::cmd_check_assumptions(&rc),
        Command::Simulate { dump_path } => commands::cmd_simulate(&rc, dump_path),
        Command::Bismut => commands::cmd_bismut(&rc),
        Command::Coupling => commands::cmd_coupling(&rc),
        Command::Inequalities => commands::cmd_inequalities(&rc),
        Command::Accept => commands::cmd_accept(&rc),
        Command::SampleLongrun => commands::cmd_sample_longrun(&rc),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed; see the report files above");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
