//! Theoretical constants and checks of recorded trajectories against the
//! convergence guarantees of the step-size rules.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, Matrix, SymmetricEigen};
use crate::problem_io::format_real;
use crate::problems::{rank_tolerance, sigmoid, FiniteSumProblem, ProblemKind};
use crate::optimizer::Trajectory;
use crate::scalar::Scalar;

/// Smoothness and strong-convexity constants of a linear-model problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralConstants<T> {
    /// Per-sample smoothness: `max ‖a_i‖²` (least squares) or `¼ max ‖a_i‖²` (logistic).
    pub l: T,
    /// Smoothness of the full objective, `λ_max(AᵀA)/N` (times ¼ for logistic).
    pub l_f: T,
    /// Smallest nonzero curvature on rowspace(A).
    pub mu: T,
    /// `L_f / μ`
    pub condition: T,
}

struct GramSpectrum<T> {
    max: T,
    min_nonzero: T,
}

fn gram_spectrum<T: Scalar>(a: &Matrix<T>) -> Result<GramSpectrum<T>> {
    let gram = if a.cols() <= a.rows() {
        a.gram_cols()
    } else {
        a.gram_rows()
    };
    let eig = SymmetricEigen::jacobi(&gram)?;
    let max = eig.max_value();
    let tol = rank_tolerance(max, a.rows(), a.cols());
    let min_nonzero = eig
        .values
        .iter()
        .copied()
        .find(|v| *v > tol)
        .unwrap_or(max);
    Ok(GramSpectrum { max, min_nonzero })
}

/// Exact eigen-based constants.
///
/// For logistic regression `μ` is the smallest nonzero eigenvalue of the
/// Hessian at the attached optimum (or at the origin without one), since the
/// loss has no global strong-convexity constant.
pub fn spectral_constants<T: Scalar>(problem: &FiniteSumProblem<T>) -> Result<SpectralConstants<T>> {
    let a = problem.matrix();
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let n = T::of_usize(problem.sample_count());
    let max_row = problem
        .row_norms_sq()
        .iter()
        .copied()
        .fold(T::zero(), T::max);
    let spectrum = gram_spectrum(a)?;
    let (l, l_f, mu) = match problem.kind() {
        ProblemKind::LeastSquares => (max_row, spectrum.max / n, spectrum.min_nonzero / n),
        ProblemKind::Logistic => {
            let quarter = T::lit(0.25);
            let reference = problem
                .optimum()
                .map(|o| o.x_star.clone())
                .unwrap_or_else(|| vec![T::zero(); problem.dimension()]);
            let mut weighted = a.clone();
            for i in 0..a.rows() {
                let h = sigmoid(dot(a.row(i), &reference));
                let w = (h * (T::one() - h)).sqrt();
                weighted.row_mut(i).iter_mut().for_each(|v| *v *= w);
            }
            let local = gram_spectrum(&weighted)?;
            (quarter * max_row, quarter * spectrum.max / n, local.min_nonzero / n)
        }
    };
    Ok(SpectralConstants {
        l,
        l_f,
        mu,
        condition: l_f / mu,
    })
}

/// Full-batch step shared by both optimum-aware rules on a consistent
/// least-squares system:
/// `(1/N) Σ (a_iᵀx − b_i)² / ‖(1/N) Σ (a_iᵀx − b_i) a_i‖²`.
///
/// Returns 0 on the solution set.
pub fn scag_reference_step<T: Scalar>(problem: &FiniteSumProblem<T>, x: &[T]) -> Result<T> {
    if problem.kind() != ProblemKind::LeastSquares {
        return Err(Error::Config("the reference step is defined for least squares".into()));
    }
    let a = problem.matrix();
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: x.len(),
        });
    }
    let n = T::of_usize(a.rows());
    let residual: Vec<T> = a
        .mul_vec(x)
        .iter()
        .zip(problem.targets())
        .map(|(ax, b)| *ax - *b)
        .collect();
    let num = norm_sq(&residual) / n;
    if num == T::zero() {
        return Ok(T::zero());
    }
    let grad: Vec<T> = a.tr_mul_vec(&residual).iter().map(|g| *g / n).collect();
    let den = norm_sq(&grad);
    if den == T::zero() {
        return Err(Error::StepUndefined);
    }
    Ok(num / den)
}

/// Ratio of each applied step `η γ` to the constant step `1/L_f`; `NaN` on
/// the initial record.
pub fn improvement_factor<T: Scalar>(traj: &Trajectory<T>, constants: &SpectralConstants<T>) -> Vec<T> {
    traj.records
        .iter()
        .map(|r| r.effective_step() * constants.l_f)
        .collect()
}

/// Fills the `improvement` column of `traj`.
pub fn annotate_improvement<T: Scalar>(traj: &mut Trajectory<T>, constants: &SpectralConstants<T>) {
    let factors = improvement_factor(traj, constants);
    for (r, f) in traj.records.iter_mut().zip(factors) {
        r.improvement = f;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeighborhoodBounds<T> {
    /// `E[f(x*, ξ) − f_i*]`
    pub sigma_sq_stop: T,
    /// `E[L ‖x* − y_i‖²]`, `y_i` the projection of `x*` onto `argmin f(·, ξ_i)`.
    pub sigma_sq_grad: T,
    /// `4 σ²_StoP / μ`
    pub radius_stop: T,
    /// `16 σ²_GraD / μ`
    pub radius_grad: T,
}

/// Exact finite-sum noise levels at the optimum and the resulting
/// neighbourhood radii.
pub fn neighborhood_bounds<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    constants: &SpectralConstants<T>,
) -> Result<NeighborhoodBounds<T>> {
    let opt = problem.optimum().ok_or_else(|| {
        Error::OptimumUnavailable("neighbourhood radii need x* and f(x*, ξ_i)".into())
    })?;
    if problem.kind() != ProblemKind::LeastSquares {
        return Err(Error::OptimumUnavailable(
            "per-sample logistic losses do not attain their minima; σ²_GraD is undefined".into(),
        ));
    }
    let n = T::of_usize(problem.sample_count());
    let sigma_sq_stop = opt
        .per_sample_value_at_opt
        .iter()
        .zip(&opt.per_sample_infimum)
        .map(|(v, lo)| *v - *lo)
        .sum::<T>()
        / n;
    let a = problem.matrix();
    let b = problem.targets();
    let mut grad_sum = T::zero();
    for (i, (&norm, &bi)) in problem.row_norms_sq().iter().zip(b).enumerate() {
        if norm == T::zero() {
            continue;
        }
        let r = dot(a.row(i), &opt.x_star) - bi;
        grad_sum += r * r / norm;
    }
    let sigma_sq_grad = constants.l * grad_sum / n;
    Ok(NeighborhoodBounds {
        sigma_sq_stop,
        sigma_sq_grad,
        radius_stop: T::lit(4.0) * sigma_sq_stop / constants.mu,
        radius_grad: T::lit(16.0) * sigma_sq_grad / constants.mu,
    })
}

/// Which guarantee to check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TheoremCheck<T> {
    /// Per step, full batch: `D_{k} ≤ (1 − μ γ_k) D_{k−1}` for the
    /// optimum-corrected Polyak step.
    StopsContraction,
    /// Per step, full batch: `D_{k} ≤ (1 − μ η γ_k) D_{k−1}`, the diversity
    /// scaling with `η ≤ 1/L`.
    GradsContraction,
    /// Seed mean: `E D_K ≤ (1 − μ γ_min)^K D_0 + 4 σ²_StoP / μ`.
    StopNeighborhood { gamma_min: T, sigma_sq: T },
    /// Seed mean: `E D_K ≤ (1 − μ γ_min / (2L))^K D_0 + 16 σ²_GraD / μ`.
    GradNeighborhood { gamma_min: T, sigma_sq: T },
    /// Seed mean: `E D_K ≤ rate^K D_0 + radius`, for the expected linear
    /// rates of the optimum-aware rules under sampling.
    SeedMeanDecay { rate: T, radius: T },
    /// Seed mean: `E f(x^K) − f* ≤ L ‖x¹ − x*‖² / (2 γ_min K)`, where the
    /// start point is `x¹` so record `j` holds `x^{j+1}`.
    MomentumRate { gamma_min: T, f_star: T },
}

impl<T> TheoremCheck<T> {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremCheck::StopsContraction => "stops_contraction",
            TheoremCheck::GradsContraction => "grads_contraction",
            TheoremCheck::StopNeighborhood { .. } => "stop_neighborhood",
            TheoremCheck::GradNeighborhood { .. } => "grad_neighborhood",
            TheoremCheck::SeedMeanDecay { .. } => "seed_mean_decay",
            TheoremCheck::MomentumRate { .. } => "momentum_rate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow<T> {
    pub check: String,
    pub step_or_seed: usize,
    pub lhs: T,
    pub rhs: T,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report<T> {
    pub rows: Vec<CheckRow<T>>,
}

impl<T: Scalar> Report<T> {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    /// Smallest `rhs − lhs` over all rows (negative when something failed).
    pub fn worst_margin(&self) -> T {
        self.rows
            .iter()
            .map(|r| r.rhs - r.lhs)
            .fold(T::infinity(), T::min)
    }

    pub fn extend(&mut self, other: Report<T>) {
        self.rows.extend(other.rows);
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "check,step_or_seed,lhs,rhs,pass")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.check,
                r.step_or_seed,
                format_real(r.lhs),
                format_real(r.rhs),
                r.pass
            )?;
        }
        Ok(())
    }
}

impl<T: Scalar> fmt::Display for Report<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} checks, {} failed, worst margin {:.3e}",
            self.rows.len(),
            self.failures(),
            self.worst_margin().as_f64()
        )
    }
}

fn mean_series<T: Scalar>(
    trajs: &[Trajectory<T>],
    value: impl Fn(&crate::optimizer::IterationRecord<T>) -> T,
) -> Result<Vec<(usize, T)>> {
    let first = trajs
        .first()
        .ok_or_else(|| Error::Config("no trajectories to check".into()))?;
    let len = trajs.iter().map(|t| t.records.len()).min().unwrap_or(0);
    let count = T::of_usize(trajs.len());
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        let iter = first.records[j].iter;
        if trajs.iter().any(|t| t.records[j].iter != iter) {
            return Err(Error::Config("trajectories are not aligned on iterations".into()));
        }
        let mean = trajs.iter().map(|t| value(&t.records[j])).sum::<T>() / count;
        out.push((iter, mean));
    }
    Ok(out)
}

/// Evaluates `check` on recorded trajectories.
///
/// The per-step contractions examine every consecutive pair of records in
/// each trajectory (runs must record every iteration); the other checks
/// average across the trajectories (one per seed) at each recorded
/// iteration. `tol` is added to every right-hand side.
pub fn contraction_report<T: Scalar>(
    trajs: &[Trajectory<T>],
    constants: &SpectralConstants<T>,
    check: &TheoremCheck<T>,
    tol: T,
) -> Result<Report<T>> {
    let mu = constants.mu;
    let mut rows = Vec::new();
    let name = check.name().to_string();
    match *check {
        TheoremCheck::StopsContraction | TheoremCheck::GradsContraction => {
            for traj in trajs {
                for w in traj.records.windows(2) {
                    if w[1].iter != w[0].iter + 1 || w[1].gamma_applied.is_nan() {
                        continue;
                    }
                    let step = match check {
                        TheoremCheck::StopsContraction => w[1].gamma_applied,
                        _ => w[1].effective_step(),
                    };
                    let lhs = w[1].dist_sq;
                    let rhs = (T::one() - mu * step) * w[0].dist_sq + tol;
                    rows.push(CheckRow {
                        check: name.clone(),
                        step_or_seed: w[1].iter,
                        lhs,
                        rhs,
                        pass: lhs <= rhs,
                    });
                }
            }
        }
        TheoremCheck::StopNeighborhood { .. }
        | TheoremCheck::GradNeighborhood { .. }
        | TheoremCheck::SeedMeanDecay { .. } => {
            let (rate, radius) = match *check {
                TheoremCheck::StopNeighborhood { gamma_min, sigma_sq } => {
                    (T::one() - mu * gamma_min, T::lit(4.0) * sigma_sq / mu)
                }
                TheoremCheck::GradNeighborhood { gamma_min, sigma_sq } => (
                    T::one() - mu * gamma_min / (T::lit(2.0) * constants.l),
                    T::lit(16.0) * sigma_sq / mu,
                ),
                TheoremCheck::SeedMeanDecay { rate, radius } => (rate, radius),
                _ => unreachable!(),
            };
            let series = mean_series(trajs, |r| r.dist_sq)?;
            let d0 = series.first().map(|s| s.1).unwrap_or_else(T::zero);
            for &(iter, mean) in &series {
                let decay = rate.max(T::zero()).powi(iter as i32) * d0;
                let rhs = decay + radius + tol;
                rows.push(CheckRow {
                    check: name.clone(),
                    step_or_seed: iter,
                    lhs: mean,
                    rhs,
                    pass: mean <= rhs,
                });
            }
        }
        TheoremCheck::MomentumRate { gamma_min, f_star } => {
            let series = mean_series(trajs, |r| r.f_full - f_star)?;
            let d1 = mean_series(trajs, |r| r.dist_sq)?
                .first()
                .map(|s| s.1)
                .unwrap_or_else(T::zero);
            for &(iter, gap) in &series {
                let k = T::of_usize(iter + 1);
                let rhs = constants.l * d1 / (T::lit(2.0) * gamma_min * k) + tol;
                rows.push(CheckRow {
                    check: name.clone(),
                    step_or_seed: iter + 1,
                    lhs: gap,
                    rhs,
                    pass: gap <= rhs,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{name}: trajectories contain nothing to check")));
    }
    Ok(Report { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenSelector {
    /// Smallest nonzero eigenvalue.
    Min,
    Max,
    /// Position in the ascending list of available eigenvectors.
    Index(usize),
}

/// Eigenpairs of `AᵀA`, ascending.
///
/// With `d ≤ N` all `d` pairs come from `AᵀA` directly. With `d > N` only the
/// rowspace pairs with nonzero eigenvalue are returned, recovered from `AAᵀ`
/// as `v = Aᵀu / √λ`.
pub fn gram_eigenpairs<T: Scalar>(problem: &FiniteSumProblem<T>) -> Result<SymmetricEigen<T>> {
    let a = problem.matrix();
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    if a.cols() <= a.rows() {
        return SymmetricEigen::jacobi(&a.gram_cols());
    }
    let eig = SymmetricEigen::jacobi(&a.gram_rows())?;
    let tol = rank_tolerance(eig.max_value(), a.rows(), a.cols());
    let keep: Vec<usize> = (0..a.rows()).filter(|&k| eig.values[k] > tol).collect();
    let mut vectors = Matrix::zeros(keep.len(), a.cols());
    let mut values = Vec::with_capacity(keep.len());
    for (r, &k) in keep.iter().enumerate() {
        let mut v = a.tr_mul_vec(eig.vectors.row(k));
        let norm = norm_sq(&v).sqrt();
        v.iter_mut().for_each(|c| *c /= norm);
        vectors.row_mut(r).copy_from_slice(&v);
        values.push(eig.values[k]);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Start point `x* + scale · v` with `v` a unit eigenvector of `AᵀA`.
pub fn eigenvector_start<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    which: EigenSelector,
    scale: T,
) -> Result<Vec<T>> {
    if problem.kind() != ProblemKind::LeastSquares {
        return Err(Error::Config("eigenvector starts are defined for least squares".into()));
    }
    let opt = problem
        .optimum()
        .ok_or_else(|| Error::OptimumUnavailable("eigenvector start needs x*".into()))?;
    let eig = gram_eigenpairs(problem)?;
    let count = eig.values.len();
    let index = match which {
        EigenSelector::Max => count - 1,
        EigenSelector::Min => {
            let tol = rank_tolerance(eig.max_value(), problem.sample_count(), problem.dimension());
            eig.values.iter().position(|v| *v > tol).unwrap_or(count - 1)
        }
        EigenSelector::Index(k) => {
            if k >= count {
                return Err(Error::IndexOutOfRange { index: k, count });
            }
            k
        }
    };
    let mut x = opt.x_star.clone();
    axpy(scale, eig.vectors.row(index), &mut x);
    Ok(x)
}

/// Per-iteration contraction factor from a least-squares fit of
/// `ln dist_sq` against the iteration number, over the longest prefix of
/// positive finite distances.
pub fn rate_fit_series<T: Scalar>(iters: &[usize], dists: &[T]) -> Result<T> {
    let prefix = dists
        .iter()
        .take_while(|d| d.is_finite() && **d > T::zero())
        .count()
        .min(iters.len());
    if prefix < 2 {
        return Err(Error::Config(format!(
            "rate fit needs at least 2 positive distances, found {prefix}"
        )));
    }
    let xs: Vec<f64> = iters[..prefix].iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = dists[..prefix].iter().map(|d| d.as_f64().ln()).collect();
    let n = prefix as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    Ok(T::lit((sxy / sxx).exp()))
}

/// [`rate_fit_series`] over a trajectory's recorded distances.
pub fn rate_fit<T: Scalar>(traj: &Trajectory<T>) -> Result<T> {
    let positive = traj
        .records
        .iter()
        .take_while(|r| r.dist_sq.is_finite() && r.dist_sq > T::zero())
        .count();
    if positive < 10 {
        return Err(Error::Config(format!(
            "rate fit needs at least 10 records with positive distance, found {positive}"
        )));
    }
    let iters: Vec<usize> = traj.records.iter().map(|r| r.iter).collect();
    rate_fit_series(&iters, &traj.dist_series())
}
