use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "extr", version, about = "Optimal-transport repair of group-biased tabular data")]
pub struct Cli {
    /// Log level (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Repair a dataset and save the interpolation model of each group.
    Repair(RepairArgs),
    /// Repair new rows with previously saved models.
    Interpolate(InterpolateArgs),
    /// Minimum mean cycle of a square cost matrix.
    Mmc(MmcArgs),
    /// Cross-validated fairness and accuracy before and after repair.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic biased dataset.
    Simulate(SimulateArgs),
    /// Time plan recomputation against interpolation for new points.
    Bench(BenchArgs),
}

/// Flags shared by every data-processing subcommand. Unset flags fall back to
/// the config file, then to the defaults shown.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default values for any of these flags.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Random seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,

    /// Comma-separated feature columns to repair [default: all features].
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub cols: Option<Vec<String>>,

    /// Protected attribute column [default: s].
    #[arg(long, value_name = "NAME")]
    pub protected_col: Option<String>,

    /// Derive the protected attribute as `protected-col > T` from a numeric column.
    #[arg(long, value_name = "T")]
    pub protected_threshold: Option<f64>,

    /// Label column; ignored when absent from the file unless set explicitly [default: y].
    #[arg(long, value_name = "NAME")]
    pub label_col: Option<String>,

    /// Evaluation option: 1 nearest-anchor step, 2 regularized, 3 hybrid [default: 2].
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub option: Option<u8>,

    /// Number of cross-validation folds [default: 10].
    #[arg(long, value_name = "K")]
    pub folds: Option<usize>,

    /// Barycenter weights [default: empirical].
    #[arg(long, value_enum)]
    pub weights: Option<WeightsArg>,

    /// Decimal digits kept when scaling costs to integers [default: 6].
    #[arg(long, value_name = "P")]
    pub scale_digits: Option<u32>,

    /// Minimum-mean-cycle solver [default: hybrid].
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,

    /// Iteration cap of the proximal solver [default: 100000].
    #[arg(long, value_name = "T")]
    pub sgd_epochs: Option<usize>,

    /// Relative objective-change tolerance of the proximal solver [default: 1e-9].
    #[arg(long)]
    pub rtol1: Option<f64>,

    /// Subgradient-norm tolerance of the proximal solver [default: 1e-7].
    #[arg(long)]
    pub rtol2: Option<f64>,

    /// Local-density cut-off used by option 3 [default: 0.05].
    #[arg(long)]
    pub density_threshold: Option<f64>,

    /// Option 3: use the nearest-anchor step for values in "a,b" [default: unset].
    #[arg(long, value_name = "A,B")]
    pub step1_interval: Option<String>,

    /// Column the interval applies to [default: first repaired column].
    #[arg(long, value_name = "NAME")]
    pub step1_column: Option<String>,

    /// Record wall-clock timings in reports [default: off].
    #[arg(long)]
    pub with_timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsArg {
    Empirical,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverArg {
    Hybrid,
    Karp,
}

#[derive(Debug, Args)]
pub struct RepairArgs {
    /// Input CSV with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Repaired CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Directory for the two model files and the run summary [default: output directory].
    #[arg(long, value_name = "DIR")]
    pub model_dir: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    /// CSV with the new rows.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Repaired CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Directory holding the model files written by `repair`.
    #[arg(long, value_name = "DIR")]
    pub model_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct MmcArgs {
    /// Square cost matrix as CSV, no header.
    #[arg(long, short)]
    pub input: PathBuf,
    /// JSON result [default: stdout].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled input CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for report.json, folds.csv and aggregate.csv.
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Five dimensions, 200 + 200 rows.
    E1a,
    /// Five dimensions, 200 + 300 rows.
    E1b,
    /// Three dimensions, 200 + 200 rows.
    E2,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Output CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Override the group-0 size.
    #[arg(long)]
    pub n0: Option<usize>,
    /// Override the group-1 size.
    #[arg(long)]
    pub n1: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    pub n0: usize,
    #[arg(long, default_value_t = 200)]
    pub n1: usize,
    /// New points in group 0.
    #[arg(long, default_value_t = 40)]
    pub k0: usize,
    /// New points in group 1.
    #[arg(long, default_value_t = 40)]
    pub k1: usize,
    /// Repetitions; medians are reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// JSON result [default: stdout table only].
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}
