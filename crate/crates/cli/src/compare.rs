use std::fmt::Write as _;
use std::fs;
use std::io::Write;

use rayon::prelude::*;
use scaledgrad::analysis::annotate_improvement;
use scaledgrad::problem_io::format_real;
use scaledgrad::{run, spectral_constants, Config, Problem, Rule, RuleKind, Run};

use crate::common::{read_problem_file, write_atomic, StartArg};
use crate::{CliError, CompareArgs, ScagArg};

/// One adaptive run and its gradient-descent counterpart from the same start.
pub struct Pair {
    pub label: String,
    pub scag: Run,
    pub gd: Run,
}

pub struct Comparison {
    pub method: ScagArg,
    pub iters: usize,
    pub pairs: Vec<Pair>,
}

fn method_name(method: ScagArg) -> &'static str {
    match method {
        ScagArg::Stops => "stops",
        ScagArg::Grads => "grads",
        ScagArg::Constant => "constant",
    }
}

/// Full-batch runs of `method` and of gradient descent with step `1/L_f`
/// for every problem and start, in parallel.
pub fn compare(
    problems: &[Problem],
    starts: &[StartArg],
    method: ScagArg,
    iters: usize,
    scale: f64,
) -> Result<Comparison, CliError> {
    let jobs: Vec<(usize, usize)> = (0..problems.len())
        .flat_map(|p| (0..starts.len()).map(move |s| (p, s)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(pi, si)| {
            let problem = &problems[pi];
            let c = spectral_constants(problem)?;
            let x0 = starts[si].resolve(problem, scale)?;
            let gd_rule = Rule::new(RuleKind::Constant).with_eta(1.0 / c.l_f);
            let scag_rule = match method {
                ScagArg::Stops => Rule::new(RuleKind::Stops),
                ScagArg::Grads => Rule::new(RuleKind::Grads).with_eta(1.0 / c.l).with_delta(0.0),
                ScagArg::Constant => gd_rule.clone(),
            };
            let mut scag = run(problem, &Config::new(scag_rule, iters), &x0)?;
            let mut gd = run(problem, &Config::new(gd_rule, iters), &x0)?;
            annotate_improvement(&mut scag, &c);
            annotate_improvement(&mut gd, &c);
            Ok(Pair {
                label: format!("p{pi}_s{si}_{}", starts[si].label()),
                scag,
                gd,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Comparison { method, iters, pairs })
}

/// Distance at iteration `k`, holding the last value once a run has halted
/// (the iterate no longer moves).
fn dist_at(traj: &Run, k: usize) -> f64 {
    traj.records
        .iter()
        .take_while(|r| r.iter <= k)
        .last()
        .map(|r| r.dist_sq)
        .unwrap_or(f64::NAN)
}

fn improvement_at(traj: &Run, k: usize) -> Option<f64> {
    traj.records.iter().find(|r| r.iter == k).map(|r| r.improvement)
}

impl Comparison {
    pub fn dist_csv(&self) -> String {
        let name = method_name(self.method);
        let mut s = String::from("iter");
        for p in &self.pairs {
            let _ = write!(s, ",{}_{name},{}_gd", p.label, p.label);
        }
        s.push('\n');
        for k in 0..=self.iters {
            let _ = write!(s, "{k}");
            for p in &self.pairs {
                let _ = write!(
                    s,
                    ",{},{}",
                    format_real(dist_at(&p.scag, k)),
                    format_real(dist_at(&p.gd, k))
                );
            }
            s.push('\n');
        }
        s
    }

    /// Improvement factors of the adaptive runs; empty after a run halted.
    pub fn improvement_csv(&self) -> String {
        let mut s = String::from("iter");
        for p in &self.pairs {
            let _ = write!(s, ",{}", p.label);
        }
        s.push('\n');
        for k in 1..=self.iters {
            let _ = write!(s, "{k}");
            for p in &self.pairs {
                s.push(',');
                if let Some(v) = improvement_at(&p.scag, k) {
                    s.push_str(&format_real(v));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn gnuplot_script(&self) -> String {
        let n = self.pairs.len();
        format!(
            "set datafile separator ','\n\
             set key outside autotitle columnhead\n\
             set xlabel 'iteration'\n\
             set multiplot layout 1,2\n\
             set logscale y\n\
             set ylabel 'squared distance to solution'\n\
             plot for [i=2:{}] 'dist.csv' using 1:i with lines\n\
             unset logscale y\n\
             set ylabel 'improvement factor'\n\
             plot for [i=2:{}] 'improvement.csv' using 1:i with lines\n\
             unset multiplot\n",
            2 * n + 1,
            n + 1
        )
    }

    /// Whether the adaptive run is no farther from the solution than gradient
    /// descent at every iteration, up to relative `tol`.
    pub fn dominates(pair: &Pair, iters: usize, tol: f64) -> bool {
        (0..=iters).all(|k| {
            let a = dist_at(&pair.scag, k);
            let b = dist_at(&pair.gd, k);
            a <= b * (1.0 + tol) + f64::MIN_POSITIVE
        })
    }

    pub fn min_improvement(pair: &Pair) -> f64 {
        pair.scag
            .records
            .iter()
            .skip(1)
            .map(|r| r.improvement)
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problems = args
        .problem
        .iter()
        .map(|p| read_problem_file(p))
        .collect::<Result<Vec<_>, _>>()?;
    let cmp = compare(&problems, &args.start, args.method, args.iters, args.scale)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| {
        CliError::Usage(format!("cannot create {}: {e}", args.out_dir.display()))
    })?;
    write_atomic(&args.out_dir.join("dist.csv"), cmp.dist_csv().as_bytes())?;
    write_atomic(&args.out_dir.join("improvement.csv"), cmp.improvement_csv().as_bytes())?;
    if args.gnuplot {
        write_atomic(&args.out_dir.join("compare.gp"), cmp.gnuplot_script().as_bytes())?;
    }
    let name = method_name(args.method);
    for pair in &cmp.pairs {
        writeln!(
            out,
            "{}: {name} dist_sq={} gd dist_sq={} min_improvement={} dominates={}",
            pair.label,
            format_real(pair.scag.last().dist_sq),
            format_real(pair.gd.last().dist_sq),
            format_real(Comparison::min_improvement(pair)),
            Comparison::dominates(pair, cmp.iters, 1e-12)
        )?;
    }
    Ok(())
}
