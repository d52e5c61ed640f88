// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thermal_berry::spectral::Gauge;

mod check;
mod commands;
mod error;
mod output;

use error::CliError;

/// Adiabatic relaxation and Berry phases of driven thermal networks.
#[derive(Debug, Parser)]
#[command(name = "thermal-berry", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact (RK4) and adiabatic trajectories plus a comparison report.
    Simulate(ScenarioArgs),
    /// Cumulative dynamical and geometric phases and the eigen-system.
    Phases(PhaseArgs),
    /// Curvature B_z sampled on a grid of the (x, y) chart.
    Fieldmap(FieldmapArgs),
    /// Parameter-space loops over one driving period and their integrals.
    Loop(PhaseArgs),
    /// Runs the invariant suite; exits with 4 if any check fails.
    Check(ScenarioArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled scenario: fig1, fig2a, fig2b, fig3, reciprocal, equilibrium.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Time step, overriding the scenario.
    #[arg(long, value_name = "SECONDS")]
    pub dt: Option<f64>,
    /// Eigenvector normalization, overriding the scenario.
    #[arg(long, value_parser = parse_gauge)]
    pub gauge: Option<Gauge>,
    /// End of the time window, overriding the scenario.
    #[arg(long, value_name = "SECONDS")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    All,
}

impl BranchArg {
    /// Zero-based branch indices out of `available`.
    pub fn select(self, available: usize) -> Result<Vec<usize>, CliError> {
        let pick = |b: usize| {
            if b < available {
                Ok(vec![b])
            } else {
                Err(CliError::Config(format!("branch {} does not exist ({available} branches)", b + 1)))
            }
        };
        match self {
            BranchArg::One => pick(0),
            BranchArg::Two => pick(1),
            BranchArg::All => Ok((0..available).collect()),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Eigen-branch to export.
    #[arg(long, value_enum, default_value = "all")]
    pub branch: BranchArg,
}

#[derive(Debug, Clone, Args)]
pub struct FieldmapArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Branch whose loop sets the default bounds.
    #[arg(long, value_enum, default_value = "all")]
    pub branch: BranchArg,
    /// Grid bounds. With a scenario they default to the loop's padded bounding box.
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_max: Option<f64>,
    /// Grid points along x.
    #[arg(long, default_value_t = 201)]
    pub nx: usize,
    /// Grid points along y.
    #[arg(long, default_value_t = 201)]
    pub ny: usize,
}

fn parse_gauge(s: &str) -> Result<Gauge, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Phases(args) => commands::phases(args),
        Command::Fieldmap(args) => commands::fieldmap(args),
        Command::Loop(args) => commands::loops(args),
        Command::Check(args) => check::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
