use std::io::Write;

use scaledgrad::analysis::annotate_improvement;
use scaledgrad::problem_io::format_real;
use scaledgrad::{run, spectral_constants, Config, Constants, HaltReason, Problem, Run};

use crate::common::{read_problem_file, write_atomic, CapArg, EtaArg, RuleSettings};
use crate::{CliError, RuleArgs, RunArgs};

impl RuleArgs {
    pub fn settings(&self, momentum: bool) -> RuleSettings {
        RuleSettings {
            kind: self.rule,
            eta: self.eta,
            delta: self.delta,
            cap: self.cap,
            tau: self.tau,
            gamma_max0: self.gamma_max0,
            mu: self.mu,
            gamma_min: self.gamma_min,
            momentum,
        }
    }
}

/// Spectral constants, computed only when a setting depends on them.
fn constants_for(
    problem: &Problem,
    settings: &RuleSettings,
) -> Result<Option<Constants>, CliError> {
    let needed = (settings.eta == EtaArg::Auto && settings.kind.uses_eta())
        || (settings.cap == CapArg::Theorem && settings.mu.is_none())
        || (settings.cap == CapArg::Theorem && settings.gamma_min.is_none());
    match spectral_constants(problem) {
        Ok(c) => Ok(Some(c)),
        Err(e) if needed => Err(e.into()),
        Err(_) => Ok(None),
    }
}

/// Builds the configuration described by `args` and runs it.
pub fn run_from_args(problem: &Problem, args: &RunArgs) -> Result<(Run, Config), CliError> {
    let momentum = args.momentum.resolve();
    let settings = args.rule.settings(momentum != scaledgrad::MomentumSchedule::None);
    let constants = constants_for(problem, &settings)?;
    // Placeholder constants are never read when `constants_for` found them unnecessary.
    let c = constants.unwrap_or(Constants { l: 1.0, l_f: 1.0, mu: 1.0, condition: 1.0 });
    let batch = args.batch.resolve();
    let rule = settings.build(batch, problem.sample_count(), &c);
    let config = Config::new(rule, args.iters)
        .with_batch(batch)
        .with_seed(args.seed)
        .with_momentum(momentum)
        .with_record_every(args.record_every);
    let x0 = args.start.resolve(problem, args.scale)?;
    let mut traj = run(problem, &config, &x0)?;
    if let Some(c) = constants {
        annotate_improvement(&mut traj, &c);
    }
    Ok((traj, config))
}

pub fn summary_line(traj: &Run) -> String {
    let last = traj.last();
    format!(
        "final f={} dist_sq={} steps={} halted={}",
        format_real(last.f_full),
        format_real(last.dist_sq),
        traj.steps,
        traj.halted_reason
    )
}

/// Writes the trajectory CSV and a one-line summary. The summary goes to
/// `err` when the CSV itself occupies `out`.
pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let problem = read_problem_file(&args.problem)?;
    let (traj, _) = run_from_args(&problem, args)?;
    let csv = traj.to_csv_string();
    match &args.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            writeln!(out, "{}", summary_line(&traj))?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            writeln!(err, "{}", summary_line(&traj))?;
        }
    }
    if let HaltReason::Error(e) = &traj.halted_reason {
        return Err(CliError::from(e.clone()));
    }
    Ok(())
}
