//! The general stochastic gradient loop and its momentum variant.
//!
//! One iteration samples a minibatch, evaluates the rule's step multiplier
//! under the current cap, moves along the (plain or optimum-corrected) mean
//! gradient and then advances the cap schedule from the applied step.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::problem_io::format_real;
use crate::problems::{BatchStats, FiniteSumProblem};
use crate::rng::ExperimentRng;
use crate::scalar::Scalar;
use crate::stepsizes::{
    adjusted_gradient_diversity, decide, plain_gradient_diversity, update_cap, DirectionKind,
    RuleKind, StepRule,
};

/// Full-gradient squared norm at which a run stops early.
pub const STATIONARY_GRAD_NORM_SQ: f64 = 1e-24;

pub const CSV_HEADER: &str =
    "iter,f_full,dist_sq,gamma_applied,gamma_raw,gamma_max,diversity,grad_norm_sq,improvement";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    /// Indices `0..N` in order, without touching the generator.
    Full,
    /// `n` indices drawn uniformly with replacement.
    Sampled(usize),
}

impl BatchSize {
    pub fn len(self, total: usize) -> usize {
        match self {
            BatchSize::Full => total,
            BatchSize::Sampled(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentumSchedule<T> {
    None,
    Constant(T),
    /// `β^k = (k − 1)/(k + 1)` for the 1-based iteration counter `k`.
    NesterovLike,
}

impl<T: Scalar> MomentumSchedule<T> {
    pub fn beta(&self, k: usize) -> T {
        match *self {
            MomentumSchedule::None => T::zero(),
            MomentumSchedule::Constant(b) => b,
            MomentumSchedule::NesterovLike => {
                T::of_usize(k.saturating_sub(1)) / T::of_usize(k + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<T> {
    pub batch: BatchSize,
    pub iterations: usize,
    pub seed: u64,
    /// Per-iteration `η^k`, overriding `rule.eta` when present.
    pub eta_schedule: Option<Vec<T>>,
    pub momentum: MomentumSchedule<T>,
    pub rule: StepRule<T>,
    pub record_every: usize,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(rule: StepRule<T>, iterations: usize) -> Self {
        Self {
            batch: BatchSize::Full,
            iterations,
            seed: 0,
            eta_schedule: None,
            momentum: MomentumSchedule::None,
            rule,
            record_every: 1,
        }
    }

    pub fn with_batch(mut self, batch: BatchSize) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_momentum(mut self, momentum: MomentumSchedule<T>) -> Self {
        self.momentum = momentum;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    /// `η^k` for the 1-based iteration `k`.
    pub fn eta(&self, k: usize) -> T {
        match &self.eta_schedule {
            Some(schedule) => schedule[k - 1],
            None => self.rule.eta,
        }
    }

    pub fn validate(&self, problem: &FiniteSumProblem<T>) -> Result<()> {
        self.rule.validate()?;
        let total = problem.sample_count();
        if let BatchSize::Sampled(n) = self.batch {
            if n == 0 || n > total {
                return Err(Error::Config(format!(
                    "batch size must satisfy 1 <= n <= N = {total}, got {n}"
                )));
            }
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration budget must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        if let Some(schedule) = &self.eta_schedule {
            if schedule.len() < self.iterations {
                return Err(Error::Config(format!(
                    "eta schedule has {} entries for {} iterations",
                    schedule.len(),
                    self.iterations
                )));
            }
            if schedule.iter().any(|e| !(*e >= T::zero()) || !e.is_finite()) {
                return Err(Error::Config("eta schedule entries must be finite and >= 0".into()));
            }
        }
        if self.rule.kind.requires_optimum() && problem.optimum().is_none() {
            return Err(Error::MissingOracle {
                rule: self.rule.kind.name(),
                oracle: "optimum information (x*, s_i, f(x*, ξ_i))",
            });
        }
        if self.momentum != MomentumSchedule::None
            && !matches!(self.rule.kind, RuleKind::Grad | RuleKind::Constant)
        {
            return Err(Error::Config(format!(
                "momentum is defined for the grad and constant rules, not {}",
                self.rule.kind
            )));
        }
        Ok(())
    }
}

/// One logged iteration. Record `k` describes the iterate `x^k` after `k`
/// steps together with the step that produced it; record 0 has `NaN` step
/// fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub f_full: T,
    /// Squared distance to the solution set (`NaN` without an optimum).
    pub dist_sq: T,
    pub gamma_applied: T,
    pub gamma_raw: T,
    pub gamma_max: T,
    /// Base step `η^k` for the η-scaled rules, 1 otherwise.
    pub eta: T,
    pub diversity: T,
    /// `‖ḡ‖²` of the sampled minibatch.
    pub grad_norm_sq: T,
    pub improvement: T,
}

impl<T: Scalar> IterationRecord<T> {
    /// Effective multiplier `η · γ` of the mean gradient.
    pub fn effective_step(&self) -> T {
        self.eta * self.gamma_applied
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iter,
            format_real(self.f_full),
            format_real(self.dist_sq),
            format_real(self.gamma_applied),
            format_real(self.gamma_raw),
            format_real(self.gamma_max),
            format_real(self.diversity),
            format_real(self.grad_norm_sq),
            format_real(self.improvement),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HaltReason {
    Budget,
    Stationary,
    Error(Error),
}

impl HaltReason {
    pub fn name(&self) -> &'static str {
        match self {
            HaltReason::Budget => "budget",
            HaltReason::Stationary => "stationary",
            HaltReason::Error(_) => "error",
        }
    }
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaltReason::Error(e) => write!(f, "error: {e}"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub rule: RuleKind,
    pub records: Vec<IterationRecord<T>>,
    pub final_x: Vec<T>,
    pub halted_reason: HaltReason,
    /// Number of steps actually taken.
    pub steps: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn last(&self) -> &IterationRecord<T> {
        self.records.last().expect("trajectory has at least the initial record")
    }

    pub fn dist_series(&self) -> Vec<T> {
        self.records.iter().map(|r| r.dist_sq).collect()
    }
}

/// Step-size quantities of one iteration, before the new iterate is scored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo<T> {
    pub gamma_applied: T,
    pub gamma_raw: T,
    pub gamma_max: T,
    pub eta: T,
    pub diversity: T,
    pub grad_norm_sq: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumState<T> {
    /// Momentum buffer `m^k`, zero initially.
    pub m: Vec<T>,
    /// Number of momentum steps taken.
    pub k: usize,
}

impl<T: Scalar> MomentumState<T> {
    pub fn new(dimension: usize) -> Self {
        Self {
            m: vec![T::zero(); dimension],
            k: 0,
        }
    }
}

/// Minibatch indices for one iteration.
pub fn sample_batch(rng: &mut ExperimentRng, total: usize, batch: BatchSize) -> Vec<usize> {
    match batch {
        BatchSize::Full => (0..total).collect(),
        BatchSize::Sampled(n) => (0..n).map(|_| rng.index(total)).collect(),
    }
}

fn logged_diversity<T: Scalar>(rule: &StepRule<T>, stats: &BatchStats<T>) -> T {
    let value = match rule.kind.direction() {
        DirectionKind::CorrectedMeanGrad => adjusted_gradient_diversity(stats, rule.delta),
        DirectionKind::PlainMeanGrad => plain_gradient_diversity(stats, rule.delta),
    };
    value.unwrap_or_else(|_| T::nan())
}

fn direction_of<'a, T: Scalar>(rule: &StepRule<T>, stats: &'a BatchStats<T>) -> Result<&'a [T]> {
    match rule.kind.direction() {
        DirectionKind::PlainMeanGrad => Ok(&stats.mean_grad),
        DirectionKind::CorrectedMeanGrad => stats
            .corrected
            .as_ref()
            .map(|c| c.mean_grad.as_slice())
            .ok_or(Error::MissingOracle {
                rule: rule.kind.name(),
                oracle: "optimum information (x*, s_i, f(x*, ξ_i))",
            }),
    }
}

/// One iteration of the general loop.
///
/// `cap` holds the current `γ_max^k` and is advanced after the step. The
/// update is `x − γ d` for the Polyak-type rules and `x − η (γ d)` for the
/// η-scaled rules, where `d` is the rule's direction.
pub fn gsgm_step<T: Scalar>(
    x: &[T],
    problem: &FiniteSumProblem<T>,
    rule: &StepRule<T>,
    eta: T,
    batch: BatchSize,
    cap: &mut T,
    rng: &mut ExperimentRng,
) -> Result<(Vec<T>, StepInfo<T>)> {
    let indices = sample_batch(rng, problem.sample_count(), batch);
    let stats = problem.batch_stats(x, &indices)?;
    let decision = decide(rule, &stats, *cap)?;
    let dir = direction_of(rule, &stats)?;
    let gamma = decision.gamma;
    let x_next: Vec<T> = if rule.kind.uses_eta() {
        x.iter().zip(dir).map(|(xi, di)| *xi - eta * (gamma * *di)).collect()
    } else {
        x.iter().zip(dir).map(|(xi, di)| *xi - gamma * *di).collect()
    };
    if x_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterate"));
    }
    let info = StepInfo {
        gamma_applied: gamma,
        gamma_raw: decision.raw_gamma,
        gamma_max: *cap,
        eta: if rule.kind.uses_eta() { eta } else { T::one() },
        diversity: logged_diversity(rule, &stats),
        grad_norm_sq: stats.mean_grad_norm_sq,
    };
    *cap = update_cap(rule, gamma, *cap)?;
    Ok((x_next, info))
}

/// One iteration of scaled momentum:
/// `m^k = (1 − β^k) γ^k ḡ + β^k m^{k−1}`, `x^{k+1} = x^k − η^k m^k`.
#[allow(clippy::too_many_arguments)]
pub fn momentum_step<T: Scalar>(
    x: &[T],
    state: &mut MomentumState<T>,
    problem: &FiniteSumProblem<T>,
    rule: &StepRule<T>,
    eta: T,
    beta: T,
    batch: BatchSize,
    cap: &mut T,
    rng: &mut ExperimentRng,
) -> Result<(Vec<T>, StepInfo<T>)> {
    if !matches!(rule.kind, RuleKind::Grad | RuleKind::Constant) {
        return Err(Error::Config(format!(
            "momentum is defined for the grad and constant rules, not {}",
            rule.kind
        )));
    }
    let indices = sample_batch(rng, problem.sample_count(), batch);
    let stats = problem.batch_stats(x, &indices)?;
    let decision = decide(rule, &stats, *cap)?;
    let scale = (T::one() - beta) * decision.gamma;
    for (m, g) in state.m.iter_mut().zip(&stats.mean_grad) {
        *m = scale * *g + beta * *m;
    }
    state.k += 1;
    let x_next: Vec<T> = x.iter().zip(&state.m).map(|(xi, mi)| *xi - eta * *mi).collect();
    if x_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("iterate"));
    }
    let info = StepInfo {
        gamma_applied: decision.gamma,
        gamma_raw: decision.raw_gamma,
        gamma_max: *cap,
        eta,
        diversity: logged_diversity(rule, &stats),
        grad_norm_sq: stats.mean_grad_norm_sq,
    };
    *cap = update_cap(rule, decision.gamma, *cap)?;
    Ok((x_next, info))
}

fn score<T: Scalar>(problem: &FiniteSumProblem<T>, x: &[T]) -> Result<(T, T, T)> {
    let full = problem.full_stats(x)?;
    let dist = problem.solution_dist_sq(x).unwrap_or_else(T::nan);
    Ok((full.mean_value, dist, full.mean_grad_norm_sq))
}

/// Runs `config.iterations` steps from `x0`.
///
/// Configuration problems are returned as `Err`; failures during the run
/// end the trajectory with [`HaltReason::Error`].
pub fn run<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    config: &RunConfig<T>,
    x0: &[T],
) -> Result<Trajectory<T>> {
    config.validate(problem)?;
    if x0.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: x0.len(),
        });
    }
    let rule = &config.rule;
    let mut rng = ExperimentRng::new(config.seed);
    let mut cap = rule.gamma_max0;
    let mut momentum = MomentumState::new(problem.dimension());
    let stationary = T::lit(STATIONARY_GRAD_NORM_SQ);
    let nan = T::nan();

    let mut x = x0.to_vec();
    let (f0, d0, mut full_grad_sq) = score(problem, &x)?;
    let mut records = vec![IterationRecord {
        iter: 0,
        f_full: f0,
        dist_sq: d0,
        gamma_applied: nan,
        gamma_raw: nan,
        gamma_max: nan,
        eta: nan,
        diversity: nan,
        grad_norm_sq: nan,
        improvement: nan,
    }];
    let mut halted = HaltReason::Budget;
    let mut steps = 0;

    for k in 1..=config.iterations {
        if full_grad_sq <= stationary {
            halted = HaltReason::Stationary;
            break;
        }
        let eta = config.eta(k);
        let outcome = match config.momentum {
            MomentumSchedule::None => {
                gsgm_step(&x, problem, rule, eta, config.batch, &mut cap, &mut rng)
            }
            schedule => momentum_step(
                &x,
                &mut momentum,
                problem,
                rule,
                eta,
                schedule.beta(k),
                config.batch,
                &mut cap,
                &mut rng,
            ),
        };
        let (x_next, info) = match outcome {
            Ok(v) => v,
            Err(e) => {
                halted = HaltReason::Error(e);
                break;
            }
        };
        x = x_next;
        steps = k;
        let (f, dist, g) = score(problem, &x)?;
        full_grad_sq = g;
        if k % config.record_every == 0 || k == config.iterations {
            records.push(IterationRecord {
                iter: k,
                f_full: f,
                dist_sq: dist,
                gamma_applied: info.gamma_applied,
                gamma_raw: info.gamma_raw,
                gamma_max: info.gamma_max,
                eta: info.eta,
                diversity: info.diversity,
                grad_norm_sq: info.grad_norm_sq,
                improvement: nan,
            });
        }
    }
    if steps > 0 && records.last().map(|r| r.iter) != Some(steps) {
        // The loop stopped between recording points; log the last iterate.
        let (f, dist, _) = score(problem, &x)?;
        records.push(IterationRecord {
            iter: steps,
            f_full: f,
            dist_sq: dist,
            gamma_applied: nan,
            gamma_raw: nan,
            gamma_max: nan,
            eta: nan,
            diversity: nan,
            grad_norm_sq: nan,
            improvement: nan,
        });
    }
    Ok(Trajectory {
        rule: rule.kind,
        records,
        final_x: x,
        halted_reason: halted,
        steps,
    })
}

/// Full-gradient squared norm at `x`.
pub fn full_grad_norm_sq<T: Scalar>(problem: &FiniteSumProblem<T>, x: &[T]) -> Result<T> {
    Ok(norm_sq(&problem.full_gradient(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems::generate_consistent_linear_system;
    use crate::stepsizes::CapMode;

    fn two_sample() -> FiniteSumProblem<f64> {
        FiniteSumProblem::least_squares(
            Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
            vec![1.0, -1.0],
        )
        .unwrap()
    }

    #[test]
    fn full_batch_consumes_no_randomness() {
        let mut rng = ExperimentRng::new(5);
        let mut fresh = ExperimentRng::new(5);
        assert_eq!(sample_batch(&mut rng, 4, BatchSize::Full), vec![0, 1, 2, 3]);
        assert_eq!(rng.next_u64(), fresh.next_u64());
    }

    #[test]
    fn sampled_batches_are_seeded() {
        let mut a = ExperimentRng::new(17);
        let mut b = ExperimentRng::new(17);
        let first = sample_batch(&mut a, 10, BatchSize::Sampled(6));
        assert_eq!(first, sample_batch(&mut b, 10, BatchSize::Sampled(6)));
        assert!(first.iter().all(|&i| i < 10));
    }

    #[test]
    fn nesterov_schedule() {
        let s = MomentumSchedule::<f64>::NesterovLike;
        assert_eq!(s.beta(1), 0.0);
        assert_eq!(s.beta(3), 0.5);
        assert_eq!(MomentumSchedule::Constant(0.9).beta(7), 0.9);
    }

    #[test]
    fn grad_with_identical_gradients_is_plain_sgd() {
        // Two identical samples: diversity 1, so grad == constant.
        let p = FiniteSumProblem::least_squares(
            Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap(),
            vec![0.5, 0.5],
        )
        .unwrap();
        let x = [0.3, -0.7];
        let grad = StepRule::new(RuleKind::Grad).with_delta(0.0).with_eta(0.1);
        let constant = StepRule::new(RuleKind::Constant).with_eta(0.1);
        let mut cap = f64::INFINITY;
        let mut rng = ExperimentRng::new(0);
        let (a, info) = gsgm_step(&x, &p, &grad, 0.1, BatchSize::Full, &mut cap, &mut rng).unwrap();
        let (b, _) = gsgm_step(&x, &p, &constant, 0.1, BatchSize::Full, &mut cap, &mut rng).unwrap();
        assert_eq!(info.gamma_applied, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation_names_missing_oracle() {
        let p = two_sample();
        let cfg = RunConfig::new(StepRule::new(RuleKind::Stops), 10);
        match cfg.validate(&p) {
            Err(Error::MissingOracle { rule, .. }) => assert_eq!(rule, "stops"),
            other => panic!("unexpected {other:?}"),
        }
        let cfg = RunConfig::new(StepRule::new(RuleKind::Grad), 10).with_batch(BatchSize::Sampled(3));
        assert!(cfg.validate(&p).is_err());
        let cfg = RunConfig::new(StepRule::new(RuleKind::Stop), 10)
            .with_momentum(MomentumSchedule::Constant(0.9));
        assert!(cfg.validate(&p).is_err());
        let cfg = RunConfig::new(StepRule::new(RuleKind::Grad), 0);
        assert!(cfg.validate(&p).is_err());
    }

    #[test]
    fn run_records_and_halts_at_stationarity() {
        let p: FiniteSumProblem<f64> = generate_consistent_linear_system(2, 2, 3, true).unwrap();
        let x0 = vec![0.0, 0.0];
        let cfg = RunConfig::new(StepRule::new(RuleKind::Stops), 500);
        let t = run(&p, &cfg, &x0).unwrap();
        assert_eq!(t.records[0].iter, 0);
        assert!(t.records[0].gamma_applied.is_nan());
        assert_eq!(t.halted_reason, HaltReason::Stationary);
        assert!(t.steps < 500);
        assert!(t.last().dist_sq < 1e-20);
        for w in t.records.windows(2) {
            assert!(w[0].iter < w[1].iter);
        }
    }

    #[test]
    fn record_every_keeps_final_iterate() {
        let p: FiniteSumProblem<f64> = generate_consistent_linear_system(20, 4, 3, true).unwrap();
        let cfg = RunConfig::new(StepRule::new(RuleKind::Grad).with_eta(0.5), 25)
            .with_batch(BatchSize::Sampled(4))
            .with_seed(9)
            .with_record_every(10);
        let t = run(&p, &cfg, &[0.0; 4]).unwrap();
        let iters: Vec<usize> = t.records.iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![0, 10, 20, 25]);
        assert_eq!(t.halted_reason, HaltReason::Budget);
    }

    #[test]
    fn cancelling_batch_is_an_error() {
        // Exact cancellation with delta = 0: diverging diversity.
        let p = two_sample();
        let rule = StepRule::new(RuleKind::Grad).with_delta(0.0);
        let mut cap = f64::INFINITY;
        let mut rng = ExperimentRng::new(0);
        let err = gsgm_step(&[0.0], &p, &rule, 1.0, BatchSize::Full, &mut cap, &mut rng);
        assert_eq!(err.unwrap_err(), Error::DivergingScaling);
        // A run starting there halts as stationary before stepping.
        let t = run(&p, &RunConfig::new(rule, 5), &[0.0]).unwrap();
        assert_eq!(t.halted_reason, HaltReason::Stationary);
        assert_eq!(t.steps, 0);
    }

    #[test]
    fn step_error_surfaces_in_halt_reason() {
        // Full gradient is nonzero but the batch {0, 1} cancels.
        let p = FiniteSumProblem::least_squares(
            Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap(),
            vec![1.0, -1.0, 5.0],
        )
        .unwrap();
        let rule = StepRule::new(RuleKind::Grad).with_delta(0.0);
        let hit = (0..200u64).find_map(|seed| {
            let cfg = RunConfig::new(rule.clone(), 1)
                .with_batch(BatchSize::Sampled(2))
                .with_seed(seed);
            let t = run(&p, &cfg, &[0.0]).unwrap();
            (t.halted_reason != HaltReason::Budget).then_some(t)
        });
        let t = hit.expect("some seed draws the cancelling pair");
        assert_eq!(t.halted_reason, HaltReason::Error(Error::DivergingScaling));
        assert_eq!(t.steps, 0);
    }

    #[test]
    fn theorem_caps_track_previous_step() {
        let p: FiniteSumProblem<f64> = generate_consistent_linear_system(10, 3, 2, true).unwrap();
        let rule = StepRule::new(RuleKind::Stop).with_cap(CapMode::Theorem {
            mu: Some(0.2),
            gamma_min: Some(1.0),
        });
        let cfg = RunConfig::new(rule, 20).with_batch(BatchSize::Sampled(2)).with_seed(4);
        let t = run(&p, &cfg, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.records[1].gamma_max, 1.0);
        for w in t.records[1..].windows(2) {
            let expected = 1.1 * w[0].gamma_applied;
            assert!((w[1].gamma_max - expected).abs() <= 1e-15 * expected);
            assert!(w[1].gamma_applied <= w[1].gamma_max);
        }
    }

    #[test]
    fn csv_layout() {
        let p: FiniteSumProblem<f64> = generate_consistent_linear_system(3, 2, 1, true).unwrap();
        let cfg = RunConfig::new(StepRule::new(RuleKind::Stop), 2);
        let t = run(&p, &cfg, &[0.0, 0.0]).unwrap();
        let csv = t.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[0], "0");
        assert_eq!(first[3], "NaN");
        let second: Vec<&str> = lines.next().unwrap().split(',').collect();
        // 17 significant digits: d.dddddddddddddddde±x
        let mantissa = second[1].split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 18);
    }
}
