//! Step sizes and step scalings computed from [`BatchStats`].
//!
//! Every function here is pure. The denominator stabiliser `delta` is added
//! to the squared norm of the mean gradient; theoretical rules run with
//! `delta = 0` and report exact cancellation as an error instead of dividing
//! by zero.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::problems::{BatchStats, CorrectedStats};
use crate::scalar::Scalar;

/// Stabiliser used by the practical rules.
pub const PRACTICAL_DELTA: f64 = 1e-6;
/// Base of the smoothing cap rule.
pub const DEFAULT_TAU: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Constant,
    Stops,
    Sps,
    Grads,
    Stop,
    Grad,
    SpsMax,
    Alig,
}

impl RuleKind {
    pub const ALL: [RuleKind; 8] = [
        RuleKind::Constant,
        RuleKind::Stops,
        RuleKind::Sps,
        RuleKind::Grads,
        RuleKind::Stop,
        RuleKind::Grad,
        RuleKind::SpsMax,
        RuleKind::Alig,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Constant => "constant",
            RuleKind::Stops => "stops",
            RuleKind::Sps => "sps",
            RuleKind::Grads => "grads",
            RuleKind::Stop => "stop",
            RuleKind::Grad => "grad",
            RuleKind::SpsMax => "sps_max",
            RuleKind::Alig => "alig",
        }
    }

    /// Rules that need `s_i` or `f(x*, ξ_i)` at every step.
    pub fn requires_optimum(self) -> bool {
        matches!(self, RuleKind::Stops | RuleKind::Sps | RuleKind::Grads)
    }

    /// Rules whose update is `η · γ · direction` rather than `γ · direction`.
    pub fn uses_eta(self) -> bool {
        matches!(self, RuleKind::Constant | RuleKind::Grads | RuleKind::Grad)
    }

    pub fn direction(self) -> DirectionKind {
        match self {
            RuleKind::Stops | RuleKind::Grads => DirectionKind::CorrectedMeanGrad,
            _ => DirectionKind::PlainMeanGrad,
        }
    }

    /// Denominator `q` of the theorem-mode cap growth `1 + μ γ_min / q`.
    fn theorem_cap_divisor(self) -> f64 {
        match self {
            RuleKind::Grad | RuleKind::Grads | RuleKind::Constant => 4.0,
            _ => 2.0,
        }
    }

    fn default_delta(self) -> f64 {
        match self {
            RuleKind::Stop | RuleKind::Grad | RuleKind::Alig => PRACTICAL_DELTA,
            _ => 0.0,
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown rule `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionKind {
    /// `(1/n) Σ g_i`
    PlainMeanGrad,
    /// `(1/n) Σ (g_i − s_i)`
    CorrectedMeanGrad,
}

/// Schedule of the upper bound `γ_max^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CapMode<T> {
    /// The cap stays at `gamma_max0` (infinite by default).
    None,
    /// `γ_max^k = (1 + μ γ_min / q) γ^{k−1}` with `q = 2` for Polyak-type
    /// rules and `q = 4` for diversity scaling.
    Theorem { mu: Option<T>, gamma_min: Option<T> },
    /// `γ_max^k = τ^{n/N} γ^{k−1}`.
    Smoothing { tau: T, batch: usize, total: usize },
}

impl<T> CapMode<T> {
    pub fn name(&self) -> &'static str {
        match self {
            CapMode::None => "none",
            CapMode::Theorem { .. } => "theorem",
            CapMode::Smoothing { .. } => "smoothing",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRule<T> {
    pub kind: RuleKind,
    /// Base step size for `constant`, `grads` and `grad`.
    pub eta: T,
    /// SPS_max denominator constant.
    pub c: T,
    pub delta: T,
    pub cap: CapMode<T>,
    pub gamma_max0: T,
}

impl<T: Scalar> StepRule<T> {
    /// Rule with default stabiliser, `η = 1`, `c = 1/2` and no cap.
    pub fn new(kind: RuleKind) -> Self {
        Self {
            kind,
            eta: T::one(),
            c: T::lit(0.5),
            delta: T::lit(kind.default_delta()),
            cap: CapMode::None,
            gamma_max0: T::infinity(),
        }
    }

    pub fn with_eta(mut self, eta: T) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_c(mut self, c: T) -> Self {
        self.c = c;
        self
    }

    pub fn with_gamma_max0(mut self, cap: T) -> Self {
        self.gamma_max0 = cap;
        self
    }

    /// Installs a cap schedule and its default initial cap: `γ_min` in
    /// theorem mode, 1 in smoothing mode.
    pub fn with_cap(mut self, cap: CapMode<T>) -> Self {
        self.gamma_max0 = match cap {
            CapMode::None => T::infinity(),
            CapMode::Theorem { gamma_min, .. } => gamma_min.unwrap_or_else(T::infinity),
            CapMode::Smoothing { .. } => T::one(),
        };
        self.cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= T::zero()) {
            return Err(Error::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.eta >= T::zero()) || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if self.kind == RuleKind::SpsMax && !(self.c > T::zero()) {
            return Err(Error::Config(format!("sps_max needs c > 0, got {}", self.c)));
        }
        if !(self.gamma_max0 > T::zero()) {
            return Err(Error::Config(format!(
                "initial cap must be > 0, got {}",
                self.gamma_max0
            )));
        }
        match self.cap {
            CapMode::None => {}
            CapMode::Theorem { mu, gamma_min } => {
                if matches!(self.kind, RuleKind::SpsMax | RuleKind::Alig) {
                    return Err(Error::Config(format!("{} uses a fixed cap", self.kind)));
                }
                if mu.is_none() || gamma_min.is_none() {
                    return Err(Error::Config(
                        "theorem cap mode needs both mu and gamma_min".into(),
                    ));
                }
            }
            CapMode::Smoothing { tau, batch, total } => {
                if matches!(self.kind, RuleKind::SpsMax | RuleKind::Alig) {
                    return Err(Error::Config(format!("{} uses a fixed cap", self.kind)));
                }
                if !(tau > T::one()) {
                    return Err(Error::Config(format!("smoothing needs tau > 1, got {tau}")));
                }
                if batch == 0 || total == 0 || batch > total {
                    return Err(Error::Config(format!(
                        "smoothing needs 1 <= n <= N, got n={batch}, N={total}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one step-size evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDecision<T> {
    /// Applied multiplier `γ` (before `η` for the η-scaled rules).
    pub gamma: T,
    pub raw_gamma: T,
    pub capped: bool,
    pub direction: DirectionKind,
}

impl<T: Scalar> StepDecision<T> {
    fn clamp(raw: T, cap: T, direction: DirectionKind) -> Self {
        let capped = raw > cap;
        Self {
            gamma: if capped { cap } else { raw },
            raw_gamma: raw,
            capped,
            direction,
        }
    }
}

fn corrected<T>(stats: &BatchStats<T>) -> Result<&CorrectedStats<T>> {
    stats.corrected.as_ref().ok_or(Error::MissingOracle {
        rule: "adjusted diversity",
        oracle: "optimum information (x*, s_i, f(x*, ξ_i))",
    })
}

fn diversity_ratio<T: Scalar>(mean_sq_norm: T, mean_norm_sq: T, delta: T) -> Result<T> {
    if mean_sq_norm == T::zero() {
        return Ok(T::one());
    }
    let den = mean_norm_sq + delta;
    if den == T::zero() {
        return Err(Error::DivergingScaling);
    }
    Ok(mean_sq_norm / den)
}

/// `[(1/n) Σ ‖g_i‖²] / [‖ḡ‖² + δ]`; 1 when every `g_i` vanishes.
pub fn plain_gradient_diversity<T: Scalar>(stats: &BatchStats<T>, delta: T) -> Result<T> {
    diversity_ratio(stats.mean_sq_norm, stats.mean_grad_norm_sq, delta)
}

/// Diversity of the optimum-corrected gradients `g_i − s_i`.
pub fn adjusted_gradient_diversity<T: Scalar>(stats: &BatchStats<T>, delta: T) -> Result<T> {
    let c = corrected(stats)?;
    diversity_ratio(c.mean_sq_norm, c.mean_grad_norm_sq, delta)
}

/// `num / den` with the conventions shared by the Polyak-type rules:
/// `0/0 = 0` (stationary) and `positive/0` is undefined.
fn polyak_ratio<T: Scalar>(num: T, den: T) -> Result<T> {
    if den == T::zero() {
        return if num <= T::zero() {
            Ok(T::zero())
        } else {
            Err(Error::StepUndefined)
        };
    }
    Ok(num / den)
}

/// Stochastic Polyak step with optimum correction:
/// `2 (1/n) Σ [f(x,ξ_i) − f(x*,ξ_i) − ⟨s_i, x − x*⟩] / ‖(1/n) Σ (g_i − s_i)‖²`.
///
/// Rounding can push the numerator a few ulps below zero next to the
/// optimum; the result is clamped at 0.
pub fn stops_gamma<T: Scalar>(stats: &BatchStats<T>) -> Result<T> {
    let c = corrected(stats).map_err(|_| Error::MissingOracle {
        rule: "stops",
        oracle: "optimum information (x*, s_i, f(x*, ξ_i))",
    })?;
    let num = T::lit(2.0) * c.mean_gap;
    Ok(polyak_ratio(num, c.mean_grad_norm_sq)?.max(T::zero()))
}

/// `2 (1/n) Σ [f(x,ξ_i) − f(x*,ξ_i)] / ‖ḡ‖²`.
pub fn sps_gamma<T: Scalar>(stats: &BatchStats<T>) -> Result<T> {
    let c = stats.corrected.as_ref().ok_or(Error::MissingOracle {
        rule: "sps",
        oracle: "per-sample values at the optimum f(x*, ξ_i)",
    })?;
    let num = T::lit(2.0) * (stats.mean_value - c.mean_value_at_opt);
    Ok(polyak_ratio(num, stats.mean_grad_norm_sq)?.max(T::zero()))
}

fn lower_bound_gap<T: Scalar>(stats: &BatchStats<T>, mean_lower: T) -> Result<T> {
    let gap = stats.mean_value - mean_lower;
    if gap < T::zero() {
        return Err(Error::Config(format!(
            "per-sample lower bounds exceed the sampled losses by {}",
            -gap
        )));
    }
    Ok(gap)
}

/// `min{cap, 2 (1/n) Σ (f(x,ξ_i) − f_i^k) / (‖ḡ‖² + δ)}`.
pub fn stop_gamma<T: Scalar>(
    stats: &BatchStats<T>,
    mean_lower: T,
    cap: T,
    delta: T,
) -> Result<StepDecision<T>> {
    let num = T::lit(2.0) * lower_bound_gap(stats, mean_lower)?;
    let raw = polyak_ratio(num, stats.mean_grad_norm_sq + delta)?;
    Ok(StepDecision::clamp(raw, cap, DirectionKind::PlainMeanGrad))
}

/// `min{cap, plain diversity}`.
pub fn grad_scaling<T: Scalar>(stats: &BatchStats<T>, cap: T, delta: T) -> Result<StepDecision<T>> {
    let raw = plain_gradient_diversity(stats, delta)?;
    Ok(StepDecision::clamp(raw, cap, DirectionKind::PlainMeanGrad))
}

/// `min{cap, (1/n) Σ (f(x,ξ_i) − f_i^k) / (c ‖ḡ‖²)}`.
pub fn sps_max_gamma<T: Scalar>(stats: &BatchStats<T>, c: T, cap: T, mean_lower: T) -> Result<T> {
    if !(c > T::zero()) {
        return Err(Error::Config(format!("sps_max needs c > 0, got {c}")));
    }
    let num = lower_bound_gap(stats, mean_lower)?;
    Ok(polyak_ratio(num, c * stats.mean_grad_norm_sq)?.min(cap))
}

/// `min{cap, (1/n) Σ (f(x,ξ_i) − f_i^k) / (‖ḡ‖² + δ)}`.
pub fn alig_gamma<T: Scalar>(stats: &BatchStats<T>, cap: T, delta: T, mean_lower: T) -> Result<T> {
    let num = lower_bound_gap(stats, mean_lower)?;
    Ok(polyak_ratio(num, stats.mean_grad_norm_sq + delta)?.min(cap))
}

/// Applied step multiplier for any rule under the current cap.
pub fn decide<T: Scalar>(rule: &StepRule<T>, stats: &BatchStats<T>, cap: T) -> Result<StepDecision<T>> {
    let direction = rule.kind.direction();
    let raw = match rule.kind {
        RuleKind::Constant => T::one(),
        RuleKind::Stops => stops_gamma(stats)?,
        RuleKind::Sps => sps_gamma(stats)?,
        RuleKind::Grads => adjusted_gradient_diversity(stats, rule.delta).map_err(|e| match e {
            Error::MissingOracle { oracle, .. } => Error::MissingOracle {
                rule: "grads",
                oracle,
            },
            other => other,
        })?,
        RuleKind::Stop => return stop_gamma(stats, stats.mean_lower_bound, cap, rule.delta),
        RuleKind::Grad => return grad_scaling(stats, cap, rule.delta),
        RuleKind::SpsMax => sps_max_gamma(stats, rule.c, T::infinity(), stats.mean_lower_bound)?,
        RuleKind::Alig => alig_gamma(stats, T::infinity(), rule.delta, stats.mean_lower_bound)?,
    };
    Ok(StepDecision::clamp(raw, cap, direction))
}

/// Next cap `γ_max^{k+1}` from the step just applied.
///
/// A zero previous step (exact stationarity) keeps the previous cap so the
/// schedule cannot collapse to a zero cap.
pub fn update_cap<T: Scalar>(rule: &StepRule<T>, previous_gamma: T, previous_cap: T) -> Result<T> {
    match rule.cap {
        CapMode::None => Ok(previous_cap),
        CapMode::Theorem { mu, gamma_min } => {
            let (mu, gamma_min) = match (mu, gamma_min) {
                (Some(m), Some(g)) => (m, g),
                _ => {
                    return Err(Error::Config(
                        "theorem cap mode needs both mu and gamma_min".into(),
                    ))
                }
            };
            if !(previous_gamma > T::zero()) {
                return Ok(previous_cap);
            }
            let growth = T::one() + mu * gamma_min / T::lit(rule.kind.theorem_cap_divisor());
            Ok(growth * previous_gamma)
        }
        CapMode::Smoothing { tau, batch, total } => {
            if !(previous_gamma > T::zero()) {
                return Ok(previous_cap);
            }
            let exponent = T::of_usize(batch) / T::of_usize(total);
            Ok(tau.powf(exponent) * previous_gamma)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Batch statistics assembled directly from explicit per-sample
    /// gradients by a naive loop.
    fn stats_from(grads: &[Vec<f64>], shifts: Option<&[Vec<f64>]>) -> BatchStats<f64> {
        let n = grads.len() as f64;
        let d = grads[0].len();
        let mean = |vs: &[Vec<f64>]| -> Vec<f64> {
            (0..d).map(|j| vs.iter().map(|v| v[j]).sum::<f64>() / n).collect()
        };
        let nsq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let mean_grad = mean(grads);
        let corrected = shifts.map(|s| {
            let diff: Vec<Vec<f64>> = grads
                .iter()
                .zip(s)
                .map(|(g, s)| g.iter().zip(s).map(|(a, b)| a - b).collect())
                .collect();
            let m = mean(&diff);
            CorrectedStats {
                mean_grad_norm_sq: nsq(&m),
                mean_grad: m,
                mean_sq_norm: diff.iter().map(|v| nsq(v)).sum::<f64>() / n,
                mean_gap: 0.0,
                mean_value_at_opt: 0.0,
            }
        });
        BatchStats {
            n: grads.len(),
            mean_grad_norm_sq: nsq(&mean_grad),
            mean_grad,
            mean_sq_norm: grads.iter().map(|v| nsq(v)).sum::<f64>() / n,
            mean_value: 0.0,
            mean_lower_bound: 0.0,
            corrected,
        }
    }

    #[test]
    fn plain_diversity_examples() {
        let same = stats_from(&[vec![1.0, 0.0], vec![1.0, 0.0]], None);
        assert_eq!(plain_gradient_diversity(&same, 0.0).unwrap(), 1.0);
        let orth = stats_from(&[vec![1.0, 0.0], vec![0.0, 1.0]], None);
        assert_eq!(plain_gradient_diversity(&orth, 0.0).unwrap(), 2.0);
        let cancel = stats_from(&[vec![1.0, 0.0], vec![-1.0, 0.0]], None);
        assert_eq!(plain_gradient_diversity(&cancel, 0.0), Err(Error::DivergingScaling));
        let zero = stats_from(&[vec![0.0, 0.0], vec![0.0, 0.0]], None);
        assert_eq!(plain_gradient_diversity(&zero, 0.0).unwrap(), 1.0);
        assert_eq!(plain_gradient_diversity(&zero, 1e-6).unwrap(), 1.0);
        let stabilised = plain_gradient_diversity(&cancel, 1e-6).unwrap();
        assert!((stabilised - 1e6).abs() < 1e-6);
    }

    #[test]
    fn adjusted_diversity_examples() {
        let g = [vec![1.0, 2.0], vec![-0.5, 3.0], vec![0.2, 0.1]];
        let zeros = vec![vec![0.0, 0.0]; 3];
        let s = stats_from(&g, Some(&zeros));
        assert_eq!(
            adjusted_gradient_diversity(&s, 0.0).unwrap(),
            plain_gradient_diversity(&s, 0.0).unwrap()
        );
        let single = stats_from(&[vec![3.0, -4.0]], Some(&[vec![1.0, 1.0]]));
        assert_eq!(adjusted_gradient_diversity(&single, 0.0).unwrap(), 1.0);
        let corr = stats_from(
            &[vec![2.0, 0.0], vec![0.0, 2.0]],
            Some(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
        );
        assert_eq!(adjusted_gradient_diversity(&corr, 0.0).unwrap(), 2.0);
        let missing = stats_from(&g, None);
        assert!(matches!(
            adjusted_gradient_diversity(&missing, 0.0),
            Err(Error::MissingOracle { .. })
        ));
    }

    #[test]
    fn stops_zero_conventions() {
        let mut s = stats_from(&[vec![0.0]], Some(&[vec![0.0]]));
        assert_eq!(stops_gamma(&s).unwrap(), 0.0);
        s.corrected.as_mut().unwrap().mean_gap = 1.0;
        assert_eq!(stops_gamma(&s), Err(Error::StepUndefined));
        let no_opt = stats_from(&[vec![1.0]], None);
        assert!(matches!(stops_gamma(&no_opt), Err(Error::MissingOracle { rule: "stops", .. })));
    }

    #[test]
    fn stop_clamps_and_flags() {
        let mut s = stats_from(&[vec![1.0]], None);
        s.mean_value = 1.0; // raw = 2 * 1 / 1
        let d = stop_gamma(&s, 0.0, 1.0, 0.0).unwrap();
        assert_eq!((d.gamma, d.raw_gamma, d.capped), (1.0, 2.0, true));
        let d = stop_gamma(&s, 0.0, 5.0, 0.0).unwrap();
        assert_eq!((d.gamma, d.capped), (2.0, false));
        assert!(matches!(stop_gamma(&s, 2.0, 5.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn stop_delta_path_with_vanishing_mean() {
        let mut s = stats_from(&[vec![1.0], vec![-1.0]], None);
        s.mean_value = 0.5;
        assert_eq!(stop_gamma(&s, 0.0, f64::INFINITY, 0.0), Err(Error::StepUndefined));
        let d = stop_gamma(&s, 0.0, f64::INFINITY, 1e-6).unwrap();
        assert!(d.gamma.is_finite() && d.gamma > 1e5);
        let d = stop_gamma(&s, 0.0, 3.0, 1e-6).unwrap();
        assert_eq!(d.gamma, 3.0);
        assert!(d.capped);
    }

    #[test]
    fn grad_scaling_examples() {
        let orth = stats_from(&[vec![1.0, 0.0], vec![0.0, 1.0]], None);
        let d = grad_scaling(&orth, f64::INFINITY, 0.0).unwrap();
        assert_eq!((d.gamma, d.capped), (2.0, false));
        let d = grad_scaling(&orth, 1.5, 0.0).unwrap();
        assert_eq!((d.gamma, d.raw_gamma, d.capped), (1.5, 2.0, true));
        let zero = stats_from(&[vec![0.0, 0.0]], None);
        assert_eq!(grad_scaling(&zero, f64::INFINITY, 1e-6).unwrap().gamma, 1.0);
    }

    #[test]
    fn sps_max_and_alig_relations() {
        let mut s = stats_from(&[vec![1.0, 2.0], vec![0.5, -1.0]], None);
        s.mean_value = 0.8;
        let inf = f64::INFINITY;
        let stop = stop_gamma(&s, 0.1, inf, 0.0).unwrap().gamma;
        assert!((sps_max_gamma(&s, 0.5, inf, 0.1).unwrap() - stop).abs() < 1e-15);
        assert_eq!(
            alig_gamma(&s, inf, 0.0, 0.1).unwrap(),
            sps_max_gamma(&s, 1.0, inf, 0.1).unwrap()
        );
        assert!(alig_gamma(&s, inf, 1e300, 0.1).unwrap() < 1e-299);
        assert_eq!(sps_max_gamma(&s, 1.0, 0.01, 0.1).unwrap(), 0.01);
        assert!(sps_max_gamma(&s, 0.0, inf, 0.1).is_err());
    }

    #[test]
    fn cap_updates() {
        let theorem = StepRule::<f64>::new(RuleKind::Stop).with_cap(CapMode::Theorem {
            mu: Some(1.0),
            gamma_min: Some(1.0),
        });
        assert_eq!(theorem.gamma_max0, 1.0);
        assert_eq!(update_cap(&theorem, 0.5, 1.0).unwrap(), 0.75);
        let grad = StepRule::<f64>::new(RuleKind::Grad).with_cap(CapMode::Theorem {
            mu: Some(1.0),
            gamma_min: Some(1.0),
        });
        assert_eq!(update_cap(&grad, 2.0, 1.0).unwrap(), 2.5);

        let full = StepRule::<f64>::new(RuleKind::Grad).with_cap(CapMode::Smoothing {
            tau: 2.0,
            batch: 10,
            total: 10,
        });
        assert_eq!(full.gamma_max0, 1.0);
        assert_eq!(update_cap(&full, 1.0, 1.0).unwrap(), 2.0);
        let half = StepRule::<f64>::new(RuleKind::Grad).with_cap(CapMode::Smoothing {
            tau: 2.0,
            batch: 5,
            total: 10,
        });
        assert!((update_cap(&half, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);

        let missing = StepRule::<f64> {
            cap: CapMode::Theorem { mu: None, gamma_min: Some(1.0) },
            ..StepRule::new(RuleKind::Stop)
        };
        assert!(update_cap(&missing, 1.0, 1.0).is_err());
        assert!(missing.validate().is_err());
        assert_eq!(update_cap(&theorem, 0.0, 0.7).unwrap(), 0.7);
    }

    #[test]
    fn validation() {
        assert!(StepRule::<f64>::new(RuleKind::Grad).validate().is_ok());
        assert!(StepRule::<f64>::new(RuleKind::Grad).with_delta(-1.0).validate().is_err());
        let bad_tau = StepRule::<f64>::new(RuleKind::Grad).with_cap(CapMode::Smoothing {
            tau: 1.0,
            batch: 1,
            total: 2,
        });
        assert!(bad_tau.validate().is_err());
        let fixed = StepRule::<f64>::new(RuleKind::Alig).with_cap(CapMode::Smoothing {
            tau: 2.0,
            batch: 1,
            total: 2,
        });
        assert!(fixed.validate().is_err());
        assert!(StepRule::<f64>::new(RuleKind::Stop).with_gamma_max0(0.0).validate().is_err());
    }

    #[test]
    fn rule_names_round_trip() {
        for kind in RuleKind::ALL {
            assert_eq!(kind.name().parse::<RuleKind>().unwrap(), kind);
        }
        assert!("adam".parse::<RuleKind>().is_err());
        assert_eq!(StepRule::<f64>::new(RuleKind::Grad).delta, 1e-6);
        assert_eq!(StepRule::<f64>::new(RuleKind::Stops).delta, 0.0);
    }
}
