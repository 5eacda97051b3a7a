use std::io::Write;

use rayon::prelude::*;
use scaledgrad::{
    contraction_report, derive_seed, neighborhood_bounds, run, spectral_constants, BatchSize,
    CapMode, Config, Error, HaltReason, MomentumSchedule, Problem, Report, Rule, RuleKind, Run,
    TheoremCheck,
};

use crate::common::{read_problem_file, write_atomic};
use crate::{CliError, VerifyArgs};

pub struct VerifyOptions {
    pub theorem: u8,
    pub seeds: usize,
    pub full_batch: bool,
    pub iters: Option<usize>,
    pub batch: usize,
    pub seed: u64,
    pub tol: f64,
}

impl VerifyOptions {
    pub fn new(theorem: u8) -> Self {
        Self {
            theorem,
            seeds: 30,
            full_batch: false,
            iters: None,
            batch: 1,
            seed: 0,
            tol: 1e-10,
        }
    }
}

pub struct Verification {
    pub check: TheoremCheck<f64>,
    pub report: Report<f64>,
    pub runs: Vec<Run>,
}

fn default_iters(theorem: u8, full_batch: bool) -> usize {
    match theorem {
        1 | 2 if full_batch => 50,
        1 | 2 => 500,
        3 | 4 => 2000,
        _ => 1000,
    }
}

/// Runs the rule behind `theorem` from `x0` and checks its guarantee.
///
/// Full-batch runs are deterministic and use a single trajectory; otherwise
/// run `i` draws its batches from `derive_seed(seed, i)` and the bound is
/// checked on the mean over runs.
pub fn verify(problem: &Problem, x0: &[f64], opts: &VerifyOptions) -> Result<Verification, CliError> {
    let c = spectral_constants(problem)?;
    let iters = opts.iters.unwrap_or_else(|| default_iters(opts.theorem, opts.full_batch));
    let optimum = || {
        problem
            .optimum()
            .ok_or_else(|| Error::OptimumUnavailable("the guarantee is stated relative to x*".into()))
    };
    let (rule, momentum, check) = match opts.theorem {
        1 => {
            let check = if opts.full_batch {
                TheoremCheck::StopsContraction
            } else {
                TheoremCheck::SeedMeanDecay { rate: 1.0 - c.mu / c.l, radius: 0.0 }
            };
            (Rule::new(RuleKind::Stops), MomentumSchedule::None, check)
        }
        2 => {
            let check = if opts.full_batch {
                TheoremCheck::GradsContraction
            } else {
                TheoremCheck::SeedMeanDecay { rate: 1.0 - c.mu / c.l, radius: 0.0 }
            };
            let rule = Rule::new(RuleKind::Grads).with_eta(1.0 / c.l).with_delta(0.0);
            (rule, MomentumSchedule::None, check)
        }
        3 => {
            let nb = neighborhood_bounds(problem, &c)?;
            let gamma_min = 1.0 / c.l;
            let rule = Rule::new(RuleKind::Stop)
                .with_delta(0.0)
                .with_cap(CapMode::Theorem { mu: Some(c.mu), gamma_min: Some(gamma_min) });
            let check = TheoremCheck::StopNeighborhood { gamma_min, sigma_sq: nb.sigma_sq_stop };
            (rule, MomentumSchedule::None, check)
        }
        4 => {
            let nb = neighborhood_bounds(problem, &c)?;
            let rule = Rule::new(RuleKind::Grad)
                .with_eta(0.5 / c.l)
                .with_delta(0.0)
                .with_cap(CapMode::Theorem { mu: Some(c.mu), gamma_min: Some(1.0) });
            let check = TheoremCheck::GradNeighborhood { gamma_min: 1.0, sigma_sq: nb.sigma_sq_grad };
            (rule, MomentumSchedule::None, check)
        }
        5 => {
            let f_star = optimum()?.f_at_opt;
            let rule = Rule::new(RuleKind::Grad)
                .with_eta(0.5 / c.l)
                .with_delta(0.0)
                .with_gamma_max0(1.0);
            let check = TheoremCheck::MomentumRate { gamma_min: 1.0, f_star };
            (rule, MomentumSchedule::NesterovLike, check)
        }
        t => return Err(CliError::Usage(format!("no guarantee numbered {t}"))),
    };
    optimum()?;

    let (batch, seeds) = if opts.full_batch {
        (BatchSize::Full, vec![opts.seed])
    } else {
        let seeds = (0..opts.seeds as u64).map(|i| derive_seed(opts.seed, i)).collect();
        (BatchSize::Sampled(opts.batch), seeds)
    };
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = Config::new(rule.clone(), iters)
                .with_batch(batch)
                .with_seed(seed)
                .with_momentum(momentum);
            let traj = run(problem, &cfg, x0)?;
            match &traj.halted_reason {
                HaltReason::Error(e) => Err(CliError::from(e.clone())),
                _ => Ok(traj),
            }
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = contraction_report(&runs, &c, &check, opts.tol)?;
    Ok(Verification { check, report, runs })
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = read_problem_file(&args.problem)?;
    let x0 = args.start.resolve(&problem, args.scale)?;
    let opts = VerifyOptions {
        theorem: args.theorem,
        seeds: args.seeds,
        full_batch: args.full_batch,
        iters: args.iters,
        batch: args.batch,
        seed: args.seed,
        tol: args.tol,
    };
    let v = verify(&problem, &x0, &opts)?;
    if let Some(path) = &args.out {
        let mut bytes = Vec::new();
        v.report.write_csv(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }
    let status = if v.report.passed() { "PASS" } else { "FAIL" };
    writeln!(
        out,
        "theorem {} [{}] over {} run(s): {} -> {status}",
        args.theorem,
        v.check.name(),
        v.runs.len(),
        v.report
    )?;
    if v.report.passed() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} checks failed",
            v.report.failures(),
            v.report.rows.len()
        )))
    }
}
