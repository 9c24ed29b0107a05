//! Command-line arguments. Every parsed command doubles as the run config
//! echoed into the report.

use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eulerize_core::certifier::{Mode, DEFAULT_EPS_CYCLE, DEFAULT_EPS_DUAL};
use serde::Serialize;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "eulerize", version, about = "Certify whether sampled flows on the 3-torus are steady Euler flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Generate a field (or check a plug) and write it as VF3.
    Gen(GenArgs),
    /// Assemble, solve and independently verify a feasibility problem.
    Certify(CertifyArgs),
    /// Axiom check, limit-cycle study and flux decay study for a plug.
    Pluglab(PluglabArgs),
    /// Build the metric for an adapted form and check the Euler equations.
    Metric(MetricArgs),
    /// Re-verify a certificate file written by `certify`.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Certify(_) => "certify",
            Command::Pluglab(_) => "pluglab",
            Command::Metric(_) => "metric",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory; every file written lands here.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Points per axis.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Torus period.
    #[arg(long = "L", visible_alias = "length", default_value_t = TAU)]
    pub length: f64,
    /// Sample offset in cells (0: lattice vertices, 0.5: cell centres).
    #[arg(long, default_value_t = 0.5)]
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// ABC flow; `--params A,B,C` (default 1,1,1).
    Abc,
    /// Constant field; `--params vx,vy,vz` (default 0,0,1).
    Constant,
    /// Vertical ambient `∂z` with a plug inserted at the torus centre.
    Plugged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlugKind {
    Wilson,
    Stream,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlugArgs {
    /// Plug variant (overrides the variant in `--plug-spec`).
    #[arg(long, value_enum)]
    pub plug: Option<PlugKind>,
    /// PlugSpec JSON file.
    #[arg(long)]
    pub plug_spec: Option<PathBuf>,
    /// Entries sampled by the axiom checker.
    #[arg(long, default_value_t = 100)]
    pub axiom_samples: usize,
    /// Time after which an orbit counts as trapped.
    #[arg(long, default_value_t = 1e3)]
    pub axiom_budget: f64,
    /// Tolerated entry–exit mismatch.
    #[arg(long, default_value_t = 1e-5)]
    pub matching_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FieldArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Built-in generator.
    #[arg(long, value_enum, conflicts_with = "field")]
    pub gen: Option<Generator>,
    /// Generator parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Vec<f64>,
    #[command(flatten)]
    pub plug: PlugArgs,
    /// Read X from a VF3 vector file instead of generating it.
    #[arg(long)]
    pub field: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Only validate the plug spec and run the axiom checker.
    #[arg(long)]
    pub check: bool,
    /// Base name of the written field.
    #[arg(long, default_value = "field")]
    pub name: String,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 50_000)]
    pub max_iterations: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPS_DUAL)]
    pub eps_dual: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_CYCLE)]
    pub eps_cycle: f64,
    #[arg(long, default_value_t = 64)]
    pub restart_check: usize,
    #[arg(long, default_value_t = 1000)]
    pub certify_every: usize,
    #[arg(long, default_value_t = 4000)]
    pub polish_iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricOptions {
    /// Skip the per-point volume rescaling.
    #[arg(long)]
    pub no_volume: bool,
    /// Largest accepted Euler residual.
    #[arg(long, default_value_t = 1e-8)]
    pub euler_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long)]
    pub mode: Mode,
    /// Equality slack.
    #[arg(long, default_value_t = 1e-6)]
    pub eta: f64,
    /// Companion field Y (vorticity-pair); defaults to curl X.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Volume coefficient (VF3 threeform); defaults to 1.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Build the metric and check the Euler equations when feasible.
    #[arg(long)]
    pub metric: bool,
    #[command(flatten)]
    pub metric_options: MetricOptions,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Axioms,
    Chains,
    Flux,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PluglabArgs {
    #[command(flatten)]
    pub plug: PlugArgs,
    /// Studies to run (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub study: Vec<Study>,
    /// First parameter of the geometric t-sequence.
    #[arg(long, default_value_t = 0.5)]
    pub t0: f64,
    /// Leaf length the sequence must reach.
    #[arg(long, default_value_t = 200.0)]
    pub gamma_target: f64,
    /// Radial entry segment `r_from,r_to` on the bottom face.
    #[arg(long, value_delimiter = ',', default_values_t = [2.5, 2.0])]
    pub sigma: Vec<f64>,
    /// Radial and vertical samples of the Bernoulli fit.
    #[arg(long, default_value_t = 401)]
    pub bernoulli_nr: usize,
    #[arg(long, default_value_t = 400)]
    pub bernoulli_nz: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricArgs {
    /// Primal certificate written by `certify`.
    #[arg(long, conflicts_with_all = ["field", "alpha"])]
    pub cert: Option<PathBuf>,
    /// VF3 vector file with X.
    #[arg(long, requires = "alpha")]
    pub field: Option<PathBuf>,
    /// VF3 oneform file with α.
    #[arg(long, requires = "field")]
    pub alpha: Option<PathBuf>,
    /// VF3 scalar file with B (default 0).
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// VF3 threeform file with μ (default 1).
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[command(flatten)]
    pub options: MetricOptions,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Certificate file written by `certify`.
    #[arg(long)]
    pub cert: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}
