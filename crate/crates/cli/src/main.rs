//! `xsect`: classify, build, shape, solve and verify cross-sections, and
//! work with multi-wavelet sets.
//!
//! Every command prints `{"manifest": …, "result": …}` (or `"error"`) on
//! stdout. Exit codes: 0 success or PASS, 1 usage/I/O/numerical error,
//! 2 mathematical nonexistence, 3 verification FAIL.

mod commands;
mod input;
mod output;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use xsect_core::{Mode, Order, DEFAULT_TOL};

use output::{render_error, usage, RunManifest, EXIT_ERROR, EXIT_OK};

#[derive(Parser, Debug)]
#[command(name = "xsect", version, about = "Cross-sections of dilation actions and multi-wavelet sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide existence, finite measure and boundedness of cross-sections.
    Classify(ClassifyArgs),
    /// Construct a cross-section.
    Build(BuildArgs),
    /// Rearrange a discrete section to finite measure or boundedness.
    Shape(ShapeArgs),
    /// Orbit parameter and representative of a point.
    Solve(SolveArgs),
    /// Seeded tiling, Calderón, Jacobian or disjointness checks.
    Verify(VerifyArgs),
    /// Integrate a test function in orbit coordinates against direct quadrature.
    Integrate(IntegrateArgs),
    /// Multi-wavelet set operations.
    Wavelet(WaveletArgs),
    /// Grid CSV of membership and solved parameters for plotting.
    Export(ExportArgs),
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Classify(_) => "classify".into(),
            Command::Build(_) => "build".into(),
            Command::Shape(_) => "shape".into(),
            Command::Solve(_) => "solve".into(),
            Command::Verify(_) => "verify".into(),
            Command::Integrate(_) => "integrate".into(),
            Command::Wavelet(w) => format!("wavelet {}", w.action.name()),
            Command::Export(_) => "export".into(),
        }
    }
}

/// A section given as a file, or built from a matrix.
#[derive(Args, Debug)]
struct SectionInput {
    /// Section JSON (plain or shaped).
    #[arg(long)]
    section: Option<PathBuf>,
    #[command(flatten)]
    matrix: MatrixInput,
}

#[derive(Args, Debug)]
struct MatrixInput {
    #[arg(long)]
    mode: Option<Mode>,
    /// The matrix `A` (discrete) or generator `B` (continuous).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// The generator `B` of a continuous action.
    #[arg(long)]
    generator: Option<PathBuf>,
    /// Relative tolerance of spectral decisions.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Also write the JSON output here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Cells per axis of the export grid.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    /// Grid covers `[−extent, extent)ⁿ` (box regions default to their bounding box).
    #[arg(long)]
    extent: Option<f64>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    input: MatrixInput,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    input: MatrixInput,
    #[command(flatten)]
    out: OutArgs,
    /// Grid CSV of the built section.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    #[value(alias = "finite-measure")]
    Finite,
    Bounded,
}

#[derive(Args, Debug)]
struct ShapeArgs {
    #[command(flatten)]
    input: SectionInput,
    #[arg(long)]
    target: TargetArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: SectionInput,
    /// `"x1,...,xn"`.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckArg {
    /// Discrete k-scan or continuous t-window uniqueness (shaped sections too).
    Tiling,
    /// `∫ χ dt = 1` for continuous sections.
    Calderon,
    /// Closed-form against finite-difference Jacobians.
    Jacobian,
    /// Moved representatives must leave the section.
    Disjointness,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    input: SectionInput,
    #[arg(long, value_enum, default_value_t = CheckArg::Tiling)]
    check: CheckArg,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV of the sampled points.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FunctionArg {
    /// Standard normal density.
    Gaussian,
    /// Normal density centred at (½, …, ½).
    ShiftedGaussian,
}

#[derive(Args, Debug)]
struct IntegrateArgs {
    #[command(flatten)]
    input: SectionInput,
    #[arg(long, value_enum, default_value_t = FunctionArg::Gaussian)]
    function: FunctionArg,
    /// Adds a Monte Carlo estimate (needs --seed).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WaveletAction {
    Check,
    Partition,
    Dimfn,
    BuildInf,
}

impl WaveletAction {
    fn name(self) -> &'static str {
        match self {
            WaveletAction::Check => "check",
            WaveletAction::Partition => "partition",
            WaveletAction::Dimfn => "dimfn",
            WaveletAction::BuildInf => "build-inf",
        }
    }
}

#[derive(Args, Debug)]
struct WaveletArgs {
    #[arg(value_enum)]
    action: WaveletAction,
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Lattice basis (rows); defaults to ℤⁿ.
    #[arg(long)]
    lattice: Option<PathBuf>,
    /// Region JSON.
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long)]
    order: Option<Order>,
    /// Pieces to build (order ∞), or the translation count required of an order-∞ set.
    #[arg(long)]
    pieces: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `"x1,...,xn"` for dimfn.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Enumeration radius for dual lattice points.
    #[arg(long, default_value_t = xsect_core::wavelet::DEFAULT_RADIUS)]
    radius: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Grid CSV of the built region (build-inf).
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    input: SectionInput,
    /// Region JSON instead of a section.
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long)]
    dump: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
}

fn run(argv: Vec<String>) -> i32 {
    if let Some(t) = std::env::var("XSECT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if t > 0 {
            xsect_core::sampling::configure_threads(t);
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let err = usage(e.to_string().trim_end());
            print!("{}", render_error(None, &err));
            eprintln!("{e}");
            return EXIT_ERROR;
        }
    };
    let mut manifest = RunManifest::new(cli.command.name(), argv.get(1..).unwrap_or(&[]));
    match commands::dispatch(cli.command, &mut manifest) {
        Ok(code) => code,
        Err(e) => {
            print!("{}", render_error(Some(&manifest), &e));
            eprintln!("xsect: {} ({})", e.message(), e.code());
            e.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run(std::env::args().collect()));
}
