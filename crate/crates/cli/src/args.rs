use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sl-iosp", version, about = "Minimal-norm potential for a prescribed Dirichlet eigenvalue")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the regime, the sign epsilon and the gap lambda* - q0
    Classify(CommonArgs),
    /// Solve for the amplitude a_m and first-integral level k
    Amplitude(CommonArgs),
    /// Print the minimal L^p error
    Error(ErrorArgs),
    /// Write the sampled u and q_hat as CSV
    Reconstruct(ReconstructArgs),
    /// Reconstruct, recompute the eigenvalue and compare both error routes
    Verify(VerifyArgs),
    /// Tabulate the error over a range of gaps
    Sweep(SweepArgs),
    /// Check the dilation identity between index m and index 1
    Dilation(DilationArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q0: Option<f64>,
    #[arg(long = "lambda-star", allow_negative_numbers = true)]
    pub lambda_star: Option<f64>,
    /// eigenvalue index, starting at 1
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<i64>,
    /// norm exponent, p > 1
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// grid intervals on [0, 1]
    #[arg(long)]
    pub grid: Option<usize>,
    /// quadrature tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// flat TOML file with the same keys as the flags; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Auto,
    Ode,
    ClosedForm,
}

#[derive(Debug, Clone, Args)]
pub struct ErrorArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// print the full verification report as JSON
    #[arg(long)]
    pub report: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// allowed |lambda_m(q_hat) - lambda*| relative to max(1, |lambda*|)
    #[arg(long = "eig-tol")]
    pub eig_tol: Option<f64>,
    /// allowed |formula - direct| relative to max(1, formula)
    #[arg(long = "norm-tol")]
    pub norm_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RangeArgs {
    #[arg(long = "x-min", allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long = "x-max", allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    /// number of grid points, endpoints included
    #[arg(long)]
    pub steps: Option<i64>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    /// worker threads (also SL_IOSP_JOBS)
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DilationArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub range: RangeArgs,
    #[arg(long)]
    pub threshold: Option<f64>,
}
