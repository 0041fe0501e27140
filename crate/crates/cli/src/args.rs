use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyberins::scenario::SweepParam;

#[derive(Debug, Parser)]
#[command(
    name = "cyberins",
    version,
    about = "Attack-aware cyber-insurance equilibria and simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Saddle point of the user/attacker game under a given coverage.
    Spe,
    /// Insurer's optimal policy, and a constraint check of `--s/--t` when given.
    Policy,
    /// Full bi-level equilibrium: optimal policy plus the actions it induces.
    Bgne,
    /// Monte Carlo estimates against the analytic loss accounting.
    Simulate,
    /// Re-solve over a range of one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Parameter to sweep: s, gamma, cu, ca or cs.
    #[arg(long, value_parser = parse_param)]
    pub param: SweepParam,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    /// Number of values, endpoints included.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: cyberins::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Unit cost of protection (market.cu).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub cu: Option<f64>,
    /// Unit cost of attack (market.ca).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ca: Option<f64>,
    /// Insurer's profit/risk tradeoff (market.cs).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub cs: Option<f64>,
    /// User risk aversion (profile.gamma).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Coverage level in [0, 1] (policy.s).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Premium (policy.t).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Scenario file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Simulation seed (sim.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulation sample count (sim.samples).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Iteration cap of the numerical saddle-point solver.
    #[arg(long, global = true)]
    pub max_iterations: Option<usize>,
}
