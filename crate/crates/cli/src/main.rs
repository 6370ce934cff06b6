use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;
mod json;
mod svg;

use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] capgrav::Error),
    #[error("check {name} failed: {detail}")]
    CheckFailed { name: String, detail: String },
}

impl CliError {
    fn name(&self) -> &str {
        match self {
            CliError::Config(_) => "validation-error",
            CliError::Io { .. } => "io-error",
            CliError::Core(e) => e.name(),
            CliError::CheckFailed { name, .. } => name,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) if e.is_validation() => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "capgrav", version, about = "Steady stratified capillary-gravity waves: laminar flows, bifurcation and continuation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single λ value (overrides `laminar.lambdas`).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Surface tension coefficient (overrides `physics.sigma`).
    #[arg(long)]
    sigma: Option<f64>,
    /// Move σ to the double point with wavenumbers 1 and n2.
    #[arg(long)]
    n2: Option<usize>,
    /// Maximum number of continuation steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Height-field dump for `eulerian` and `verify` (overrides `field`).
    #[arg(long)]
    field: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Laminar flows over a list of λ values.
    Laminar(Common),
    /// Table of the dispersion function and its first roots.
    Dispersion(Common),
    /// Locate λ_* and classify the bifurcation point.
    Classify(Common),
    /// Reduced-equation coefficients and branch germs.
    Coeffs(Common),
    /// Branch germs only.
    Predict(Common),
    /// Continue the local branches from λ_*.
    Branch(Common),
    /// Physical fields of a height field and their residual checks.
    Eulerian(Common),
    /// Run every residual check on a stored field.
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig, &Overrides) -> Result<(), CliError>) = match &cli.command {
        Command::Laminar(c) => (c, commands::laminar),
        Command::Dispersion(c) => (c, commands::dispersion),
        Command::Classify(c) => (c, commands::classify),
        Command::Coeffs(c) => (c, commands::coeffs),
        Command::Predict(c) => (c, commands::predict),
        Command::Branch(c) => (c, commands::branch),
        Command::Eulerian(c) => (c, commands::eulerian),
        Command::Verify(c) => (c, commands::verify),
    };
    let ov = Overrides {
        out: common.out.clone(),
        lambda: common.lambda,
        sigma: common.sigma,
        n2: common.n2,
        steps: common.steps,
        field: common.field.clone(),
    };
    let result = RunConfig::load(&common.config, &ov).and_then(|cfg| run(&cfg, &ov));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code())
        }
    }
}
