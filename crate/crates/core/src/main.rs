use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use bkdv::harness::{self, ExperimentConfig, SweepAxis};
use bkdv::Error;

#[derive(Parser)]
#[command(name = "bkdv", about = "Solitary waves of the perturbed KdV equation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the initial perturbation (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the PDE and write frames.
    Simulate(Common),
    /// Evolve and decompose, writing the parameter track.
    Track(Common),
    /// Track the PDE and compare with the reduced dynamics.
    Compare(Common),
    /// Run one track per level of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// eps_a, eps_x, eps_t or eps0.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        levels: Vec<f64>,
    },
    /// Spectrum of the linearized operator and constrained coercivity.
    Spectrum(Common),
    /// Balance-law residuals along a PDE run.
    Audit(Common),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_TUBE: u8 = 4;

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn json(value: &impl serde::Serialize) -> anyhow::Result<String> {
    serde_json::to_string_pretty(value).context("serializing report")
}

/// Returns the exit code for a finished command.
fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate(c) => {
            let frames = harness::run_simulate(&load(&c)?)?;
            println!("simulated {} frames up to t = {}", frames.len(), frames.last().map_or(0.0, |f| f.t));
            Ok(0)
        }
        Command::Track(c) => {
            let cfg = load(&c)?;
            let rec = harness::run_track(&cfg)?;
            println!(
                "status {} at t = {} of {}; max ‖ξ‖_H1 = {:.3e}",
                rec.status.label(),
                rec.t_reached(),
                cfg.t_end,
                rec.max_xi_h1()
            );
            Ok(if rec.status.completed() { 0 } else { EXIT_TUBE })
        }
        Command::Compare(c) => {
            let mut report = harness::run_compare(&load(&c)?)?;
            report.samples.clear();
            println!("{}", json(&report)?);
            Ok(if report.status.completed() { 0 } else { EXIT_TUBE })
        }
        Command::Sweep { common, axis, levels } => {
            let axis = SweepAxis::from_label(&axis)?;
            let report = harness::run_sweep(&load(&common)?, axis, &levels)?;
            println!("{}", json(&report)?);
            let all_done = report.levels.iter().all(|l| l.status == "completed");
            Ok(if all_done { 0 } else { EXIT_TUBE })
        }
        Command::Spectrum(c) => {
            println!("{}", json(&harness::run_spectrum(&load(&c)?)?)?);
            Ok(0)
        }
        Command::Audit(c) => {
            let report = harness::run_audit(&load(&c)?)?;
            let worst = report.worst_ratio(1e-7, 1e-3, false);
            let richardson = report.worst_ratio(1e-7, 1e-3, true);
            println!("worst residual / tolerance (H, P, weighted P): {worst:.3?}");
            println!("after Richardson extrapolation: {richardson:.3?}");
            Ok(0)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::InvalidArgument(_)) => EXIT_CONFIG,
        Some(Error::Io(_)) | None => 1,
        Some(_) => EXIT_NUMERIC,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
