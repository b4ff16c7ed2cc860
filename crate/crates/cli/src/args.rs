//! Command-line surface. Every physical parameter is optional here so that a
//! preset can supply it; resolution happens in `experiments`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gphase", version, about = "Geometric phase of a dephased qubit: sweeps and experiments")]
pub struct Cli {
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads for sweeps. Results do not depend on this.
    #[arg(long, global = true, env = "GPHASE_WORKERS", default_value_t = 1)]
    pub workers: usize,

    /// Report failed sweep points in the status column and exit 0.
    #[arg(long, global = true)]
    pub keep_going: bool,

    #[arg(long, global = true, value_enum)]
    pub preset: Option<PresetName>,

    /// Record the wall-clock time in the provenance block. Off by default so
    /// repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    PaperFig1c,
    #[value(name = "paper-figA")]
    #[serde(rename = "paper-figA")]
    PaperFigA,
    TrotterClaim,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decoherence factor r(t) over one system cycle.
    Trace(TraceArgs),
    /// Geometric phase for the two-level bath, at one field or over a sweep.
    GpCurve(GpCurveArgs),
    /// Exact and perturbative phase corrections for the Ising chain over λ.
    IsingSweep(IsingSweepArgs),
    /// Closed-form expansion coefficients for the Ising chain over λ.
    IsingApprox(IsingApproxArgs),
    /// Full-cycle Trotter fidelity against exact evolution.
    TrotterCheck(TrotterArgs),
    /// Baseline-subtracted correction from the simulated protocol.
    Correction(CorrectionArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    TwoLevel,
    Ising,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Zz,
    Projector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shift {
    OneSided,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionArg {
    Exact,
    CoarseTrotter,
    PulseLevel,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// System precession frequency Ω (angular, rad per unit time).
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Polar angle θ of the system state, in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Time intervals per cycle (even, >= 64).
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TwoLevelArgs {
    /// Environment gap Δ.
    #[arg(long, allow_negative_numbers = true)]
    pub delta_gap: Option<f64>,
    /// System-environment coupling δ.
    #[arg(long, allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    /// Longitudinal field B. Overrides --lambda/--znu.
    #[arg(long, allow_negative_numbers = true)]
    pub b_field: Option<f64>,
    /// Distance to criticality λ, with B = λ|λ|^(zν−1)Δ.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "b_field")]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "lambda")]
    pub znu: Option<f64>,
    #[arg(long, value_enum)]
    pub convention: Option<Convention>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FieldSweepArgs {
    /// Lower end of the B sweep (absolute units).
    #[arg(long, allow_negative_numbers = true, requires = "b_max")]
    pub b_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "b_min")]
    pub b_max: Option<f64>,
    /// Sweep points, inclusive of both ends.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct IsingArgs {
    #[arg(long)]
    pub n_spins: Option<usize>,
    /// Exchange coupling J.
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<f64>,
    /// System-environment coupling δ.
    #[arg(long, allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    #[arg(long, value_enum)]
    pub shift: Option<Shift>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct LambdaSweepArgs {
    /// Single transverse field λ.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["lambda_min", "lambda_max"])]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "lambda_max")]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "lambda_min")]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_enum, default_value_t = BathKind::TwoLevel)]
    pub bath: BathKind,
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub two_level: TwoLevelArgs,
    /// Ising chain length (with --bath ising).
    #[arg(long)]
    pub n_spins: Option<usize>,
    /// Ising exchange coupling J (with --bath ising).
    #[arg(long, allow_negative_numbers = true)]
    pub j: Option<f64>,
    #[arg(long, value_enum)]
    pub shift: Option<Shift>,
}

#[derive(Debug, Args)]
pub struct GpCurveArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub two_level: TwoLevelArgs,
    #[command(flatten)]
    pub sweep: FieldSweepArgs,
}

#[derive(Debug, Args)]
pub struct IsingSweepArgs {
    #[command(flatten)]
    pub ising: IsingArgs,
    #[command(flatten)]
    pub lambdas: LambdaSweepArgs,
    /// Ω in units of J; the preset may supply several.
    #[arg(long, allow_negative_numbers = true)]
    pub omega_over_j: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IsingApproxArgs {
    #[command(flatten)]
    pub ising: IsingArgs,
    #[command(flatten)]
    pub lambdas: LambdaSweepArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_over_j: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Use the uncorrected closed-form coefficients instead of the corrected ones.
    #[arg(long)]
    pub as_stated: bool,
}

#[derive(Debug, Args)]
pub struct TrotterArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub two_level: TwoLevelArgs,
    #[command(flatten)]
    pub sweep: FieldSweepArgs,
    /// Required worst-case cycle fidelity.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Largest power-of-two step count tried.
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CorrectionArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub two_level: TwoLevelArgs,
    #[command(flatten)]
    pub sweep: FieldSweepArgs,
    #[arg(long, value_enum)]
    pub decomposition: Option<DecompositionArg>,
    /// Trotter steps per cycle.
    #[arg(long)]
    pub trotter_steps: Option<usize>,
}
