//! `dcpoly`: difference-of-convex decompositions of polynomials from the
//! command line.
//!
//! Results go to stdout (or `--out`). Failures print a JSON object
//! `{"error": kind, "message": ...}` on stderr and exit with 1 for solver or
//! infeasibility failures and 2 for usage or parse errors.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dcpoly", version, about = "Difference-of-convex decompositions of polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose a polynomial as g − h with g, h cone-convex.
    Decompose(DecomposeArgs),
    /// Certify dsos/sdsos/sos-convexity of a polynomial.
    CheckConvexity(CheckArgs),
    /// Build an exact polynomial with a strictly dd Hessian Gram matrix.
    ConstructInterior(InteriorArgs),
    /// Exact sphere integral of a monomial or polynomial.
    IntegrateSphere(SphereArgs),
    /// Random instance `Σ x_i^{2d} + g` with integer coefficients in [−30, 30].
    GenInstance(GenArgs),
    /// Run the convex-concave procedure.
    Minimize(MinimizeArgs),
    /// Undominated-decomposition sweep over random instances and cones.
    BenchDecomp(BenchDecompArgs),
    /// Compare CCP under different decompositions.
    BenchCcp(BenchCcpArgs),
    /// Convexity levels of 2x₁⁴ + 2x₂⁴ + a x₁³x₂ + b x₁²x₂² + c x₁x₂³ on a grid.
    ScanFamily(ScanArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ConeArg {
    Dsos,
    Sdsos,
    Sos,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LambdaConeArg {
    Dd,
    Sdd,
    Psd,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ObjectiveArg {
    Feas,
    Undom,
    TracePoint,
    LmaxPoint,
    LmaxBall,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algorithm {
    Ccp,
    MultiCcp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum InteriorKind {
    Full,
    Homogeneous,
}

#[derive(Args, Debug)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Polynomial JSON file, `-` for stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long, value_enum, default_value = "feas")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "sos")]
    cone: ConeArg,
    /// Cone for λmax bounds (defaults to the matrix cone of `--cone`).
    #[arg(long, value_enum)]
    lambda_cone: Option<LambdaConeArg>,
    /// Comma-separated point for point objectives (default: origin).
    #[arg(long)]
    point: Option<String>,
    /// Ball radius for `lmax-ball`.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Solver time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long, value_enum, default_value = "sos")]
    cone: ConeArg,
    /// Include the Gram certificate in the output.
    #[arg(long)]
    certificate: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct InteriorArgs {
    #[arg(long)]
    n: usize,
    /// Even total degree 2d.
    #[arg(long)]
    degree: u32,
    #[arg(long, value_enum, default_value = "full")]
    kind: InteriorKind,
    /// Include the exact Gram matrix.
    #[arg(long)]
    gram: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SphereArgs {
    /// Comma-separated exponent vector of a monomial.
    #[arg(long, conflicts_with = "input")]
    exp: Option<String>,
    /// Polynomial JSON file, `-` for stdin; reports the normalized average.
    #[arg(long)]
    input: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    /// Objective polynomial JSON; without it a random instance is generated
    /// from `--n`, `--degree` and `--seed`.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    /// Seed for the random instance and the Gaussian starting point.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "ccp")]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value = "undom")]
    objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "sos")]
    cone: ConeArg,
    #[arg(long, value_enum)]
    lambda_cone: Option<LambdaConeArg>,
    /// Constrain to the ball of this radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Comma-separated starting point (default: seeded Gaussian).
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value_t = 240.0)]
    budget_s: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BenchDecompArgs {
    /// Comma-separated variable counts.
    #[arg(long, default_value = "4,6,8")]
    n: String,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    /// Comma-separated cones.
    #[arg(long, default_value = "dsos,sdsos,sos")]
    cones: String,
    /// Seed list: `a..b` (exclusive) or comma-separated.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct BenchCcpArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    degree: u32,
    #[arg(long, default_value = "0..10")]
    seeds: String,
    #[arg(long, value_enum, default_value = "sos")]
    cone: ConeArg,
    /// Per-arm CCP budget.
    #[arg(long, default_value_t = 60.0)]
    budget_s: f64,
    /// Fixed ball radius (default: seeded integer in [20, 50]).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = default_threads())]
    threads: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// `lo:hi:step`.
    #[arg(long, default_value = "-6:6:0.5")]
    a_range: String,
    #[arg(long, default_value = "-6:6:0.5")]
    b_range: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// The distribution OpenBLAS picks AVX-512 kernels that corrupt PSD blocks
/// larger than 32 and reads its kernel choice only at load time, so the
/// process restarts itself with an AVX2 kernel set pinned.
#[cfg(target_arch = "x86_64")]
fn pin_blas_kernels() -> Option<ExitCode> {
    const VAR: &str = "OPENBLAS_CORETYPE";
    if std::env::var_os(VAR).is_some()
        || !std::arch::is_x86_feature_detected!("avx512f")
        || !std::arch::is_x86_feature_detected!("avx2")
    {
        return None;
    }
    let exe = std::env::current_exe().ok()?;
    let status = std::process::Command::new(exe)
        .args(std::env::args_os().skip(1))
        .env(VAR, "Haswell")
        .status()
        .ok()?;
    Some(match status.code() {
        Some(c) => ExitCode::from(c as u8),
        None => ExitCode::FAILURE,
    })
}

#[cfg(not(target_arch = "x86_64"))]
fn pin_blas_kernels() -> Option<ExitCode> {
    None
}

fn main() -> ExitCode {
    if let Some(code) = pin_blas_kernels() {
        return code;
    }
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
