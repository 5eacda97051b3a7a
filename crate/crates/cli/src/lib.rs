//! Command-line experiment harness: generate problems, run the step-size
//! rules, compare against gradient descent and check the convergence
//! guarantees on recorded trajectories.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scaledgrad::{Error, RuleKind};

pub mod common;
pub mod compare;
pub mod gen;
pub mod run;
pub mod verify;

use common::{BatchArg, CapArg, EtaArg, MomentumArg, StartArg};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Numerical(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite(_)
            | Error::DivergingScaling
            | Error::StepUndefined
            | Error::NoConvergence(_)
            | Error::ZeroMatrix => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

fn parse_rule(s: &str) -> Result<RuleKind, String> {
    s.parse::<RuleKind>().map_err(|_| {
        let names: Vec<&str> = RuleKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown rule `{s}` (expected one of {})", names.join(", "))
    })
}

#[derive(Debug, Parser)]
#[command(name = "scaledgrad", version, about = "Adaptive step-size experiments on finite sums")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random least-squares or logistic problem file.
    Gen(GenArgs),
    /// Run one rule and write its trajectory CSV.
    Run(RunArgs),
    /// Compare ScaG against gradient descent with step 1/L_f.
    Compare(CompareArgs),
    /// Check a convergence guarantee and write a report CSV.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Ls,
    Logit,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scale every row of A to unit norm.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_enum, default_value_t = KindArg::Ls)]
    pub kind: KindArg,
    /// Target noise standard deviation (ls) or label flip probability (logit).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    #[arg(long, value_parser = parse_rule)]
    pub rule: RuleKind,
    /// Base step size, or `auto` for 1/L_f (constant), 1/L (grads), 1/(2L) (grad, momentum).
    #[arg(long, default_value = "auto")]
    pub eta: EtaArg,
    /// Denominator stabiliser; defaults to 1e-6 for stop, grad and alig, 0 otherwise.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = CapArg::None)]
    pub cap: CapArg,
    /// Smoothing base for `--cap smoothing`.
    #[arg(long, default_value_t = scaledgrad::stepsizes::DEFAULT_TAU)]
    pub tau: f64,
    /// Initial cap; defaults to gamma_min (theorem), 1 (smoothing) or unbounded.
    #[arg(long = "gamma-max0")]
    pub gamma_max0: Option<f64>,
    /// Strong-convexity constant for theorem caps; computed when omitted.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Lower bound on the step for theorem caps; 1/L or 1 by rule when omitted.
    #[arg(long = "gamma-min")]
    pub gamma_min: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[command(flatten)]
    pub rule: RuleArgs,
    /// `full` or a sample count drawn with replacement.
    #[arg(long, default_value = "full")]
    pub batch: BatchArg,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// none, const:BETA or nesterov.
    #[arg(long, default_value = "none")]
    pub momentum: MomentumArg,
    #[arg(long = "record-every", default_value_t = 1)]
    pub record_every: usize,
    /// zeros, eig:min, eig:max, eig:K or file:PATH.
    #[arg(long, default_value = "zeros")]
    pub start: StartArg,
    /// Distance of an eigenvector start from x*.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Trajectory CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ScagArg {
    Stops,
    Grads,
    Constant,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Problem files; repeat for several instances.
    #[arg(long, required = true)]
    pub problem: Vec<PathBuf>,
    /// Start points; repeat for several.
    #[arg(long, default_value = "zeros")]
    pub start: Vec<StartArg>,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Adaptive method placed against gradient descent.
    #[arg(long, value_enum, default_value_t = ScagArg::Stops)]
    pub method: ScagArg,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Also write a gnuplot script for the two CSV files.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub theorem: u8,
    /// Number of seeds for the expectation checks.
    #[arg(long, default_value_t = 30)]
    pub seeds: usize,
    /// Deterministic full-batch runs with per-step checks (theorems 1 and 2).
    #[arg(long = "full-batch")]
    pub full_batch: bool,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Master seed from which each run's stream is derived.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "zeros")]
    pub start: StartArg,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Report CSV; not written when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit
/// status. Normal output goes to `out`, diagnostics to `err`.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => gen::cmd_gen(a, out),
        Command::Run(a) => run::cmd_run(a, out, err),
        Command::Compare(a) => compare::cmd_compare(a, out),
        Command::Verify(a) => verify::cmd_verify(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
