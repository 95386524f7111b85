//! `trslab`: solve trust-region subproblems, run the convergence
//! experiments, and run the verification suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod experiment;
mod solve;
mod verify;

/// Exit status for unreadable or malformed input.
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_NEAR_HARD: u8 = 3;
pub const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "trslab",
    version,
    about = "Krylov trust-region subproblem solver and convergence experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve min gᵀs + ½sᵀAs subject to ‖s‖ ≤ Δ for a matrix read from disk.
    Solve(SolveArgs),
    /// Run a named example (1a, 1b, 2, 3, 4) or a JSON problem spec and
    /// write <name>.csv, <name>.plt and <name>.summary.json.
    Experiment(ExperimentArgs),
    /// Run the property suites and report each check with its margin.
    Verify(VerifyArgs),
}

#[derive(clap::Args, Debug)]
pub struct SolveArgs {
    /// Symmetric matrix in Matrix Market format (coordinate or array).
    #[arg(long, value_name = "PATH")]
    pub matrix: PathBuf,
    /// Gradient as whitespace-separated reals (or a Matrix Market n x 1 array).
    #[arg(
        long,
        value_name = "PATH",
        conflicts_with = "seed_gradient",
        required_unless_present = "seed_gradient"
    )]
    pub gradient: Option<PathBuf>,
    /// Use a seeded Gaussian unit vector as the gradient instead of a file.
    #[arg(long, value_name = "SEED")]
    pub seed_gradient: Option<u64>,
    /// Trust-region radius.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Stop when the residual ‖(A+λI)s+g‖ falls below this value.
    #[arg(long, default_value_t = trslab::gltr::DEFAULT_RESID_TOL)]
    pub tol: f64,
    /// Iteration limit.
    #[arg(long, default_value_t = trslab::gltr::DEFAULT_K_MAX)]
    pub k_max: usize,
    /// Tolerance used when reporting the KKT conditions.
    #[arg(long, default_value_t = 1e-8)]
    pub kkt_tol: f64,
    /// Write the solution vector, one value per line, to this file.
    #[arg(long, value_name = "PATH")]
    pub solution_out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct ExperimentArgs {
    /// Example name (1a, 1b, 2, 3, 4) or path to a JSON problem spec.
    pub name: String,
    /// Problem size (default 10000; 2000 for the dense example 4).
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed for the gradient and any random matrix.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest Lanczos index.
    #[arg(long, default_value_t = trslab::experiments::EXPERIMENT_K_MAX)]
    pub kmax: usize,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Apply this many seeded Householder reflectors as an orthogonal
    /// similarity to a diagonal example (n ≤ 2000).
    #[arg(long)]
    pub similarity: Option<usize>,
    /// Also evaluate the coupling norm γ̃ and the first multiplier bound
    /// every this many iterations (slow).
    #[arg(long, value_name = "STRIDE")]
    pub checkpoints: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Quick,
    Full,
}

#[derive(clap::Args, Debug)]
pub struct VerifyArgs {
    /// quick: reduced problem sizes. full: the default example sizes.
    #[arg(long, value_enum, default_value_t = Scale::Quick)]
    pub scale: Scale,
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(a) => solve::run(&a),
        Command::Experiment(a) => experiment::run(&a),
        Command::Verify(a) => verify::run(&a),
    }
}
