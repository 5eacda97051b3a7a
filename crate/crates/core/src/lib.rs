//! Adaptive step sizes for stochastic gradient methods on finite sums.
//!
//! The math is generic over a floating-point [`Scalar`] (`f32` or `f64`);
//! the unsuffixed aliases below fix it to `f64`.

// `!(x > 0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod problem_io;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod stepsizes;

pub use analysis::{
    contraction_report, eigenvector_start, improvement_factor, neighborhood_bounds, rate_fit,
    scag_reference_step, spectral_constants, EigenSelector, NeighborhoodBounds, Report,
    SpectralConstants, TheoremCheck,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, SymmetricEigen};
pub use optimizer::{
    gsgm_step, momentum_step, run, BatchSize, HaltReason, IterationRecord, MomentumSchedule,
    RunConfig, Trajectory,
};
pub use problem_io::{load_problem, read_problem, write_problem};
pub use problems::{
    generate_consistent_linear_system, generate_least_squares, generate_logistic,
    optimum_info_exact, BatchStats, FiniteSumProblem, OptimumInfo, ProblemKind,
};
pub use rng::{derive_seed, ExperimentRng};
pub use scalar::Scalar;
pub use stepsizes::{decide, update_cap, CapMode, RuleKind, StepDecision, StepRule};

pub type Problem = FiniteSumProblem<f64>;
pub type Rule = StepRule<f64>;
pub type Config = RunConfig<f64>;
pub type Run = Trajectory<f64>;
pub type Constants = SpectralConstants<f64>;

pub type Problem32 = FiniteSumProblem<f32>;
pub type Rule32 = StepRule<f32>;
pub type Config32 = RunConfig<f32>;
pub type Run32 = Trajectory<f32>;
