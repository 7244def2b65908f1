use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rrw", version, about = "Rate functions and most likely paths of reflected random walk areas")]
pub struct Cli {
    /// Worker threads for simulation and lattice search (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Most likely path for one target mean.
    Path(PathArgs),
    /// Rate function over a grid of targets, with regime transitions.
    RateCurve(CurveArgs),
    /// Monte Carlo runs of the Lindley recursion.
    Simulate(SimArgs),
    /// Lattice dynamic program against the analytic solver.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Keep the terminal gradient level this far below a finite upper tail
    /// exponent.
    #[arg(long, default_value_t = 0.0)]
    pub gradient_margin: f64,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    /// Model as inline JSON or a path to a JSON file.
    pub model: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    /// Number of uniform sample points on [0, 1].
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
    /// Output file (.csv or .json); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format for stdout output.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    pub model: String,
    #[arg(long, default_value_t = 0.0)]
    pub z_min: f64,
    #[arg(long)]
    pub z_max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Curve file (.csv or .json); the transition report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    pub model: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    /// Overridden by the RRW_SEED environment variable.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated tail thresholds r.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub thresholds: Vec<f64>,
    /// Keep and export the replication with the largest sample mean.
    #[arg(long)]
    pub keep_extreme: bool,
    /// Directory for outcome.json, tail_report.csv, extreme_path.csv and
    /// manifest.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub model: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z: f64,
    /// Lattice counts n_t,n_h,n_a.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [200usize, 200, 400])]
    pub grid: Vec<usize>,
    /// Lattice path output (.csv or .json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}
