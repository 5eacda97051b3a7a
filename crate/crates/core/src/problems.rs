//! Finite-sum objectives `f(x) = (1/N) Σ f(x, ξ_i)` over a dense data matrix.
//!
//! Two families are supported, both linear models whose per-sample gradient
//! is a scalar multiple of the data row:
//!
//! * least squares, `f(x, ξ_i) = ½(a_iᵀx − b_i)²`
//! * logistic regression, `f(x, ξ_i) = −b_i ln h(a_iᵀx) − (1 − b_i) ln(1 − h(a_iᵀx))`
//!   with `h` the sigmoid and labels in `{0, 1}`.
//!
//! Because `∇f(x, ξ_i) = r_i a_i` for a scalar `r_i`, the batch statistics use
//! `‖g_i‖² = ‖a_i‖² r_i²` with cached row norms instead of materialising the
//! per-sample gradients.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, Matrix, SymmetricEigen};
use crate::rng::ExperimentRng;
use crate::scalar::Scalar;

/// Row-norm tolerance for the `rows_normalized` flag.
pub const ROW_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LeastSquares,
    Logistic,
}

impl ProblemKind {
    /// Tag used in problem files.
    pub fn tag(self) -> &'static str {
        match self {
            ProblemKind::LeastSquares => "ls",
            ProblemKind::Logistic => "logit",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "ls" => Some(ProblemKind::LeastSquares),
            "logit" => Some(ProblemKind::Logistic),
            _ => None,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug)]
pub struct LeastSquaresPayload<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
    pub rows_normalized: bool,
}

#[derive(Clone, Debug)]
pub struct LogisticPayload<T> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
}

#[derive(Clone, Debug)]
pub enum Payload<T> {
    LeastSquares(LeastSquaresPayload<T>),
    Logistic(LogisticPayload<T>),
}

/// Oracle information at a minimiser `x*`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimumInfo<T> {
    pub x_star: Vec<T>,
    /// Row `i` holds `s_i = ∇f(x*, ξ_i)`.
    pub per_sample_grad_at_opt: Matrix<T>,
    /// Lower bounds `f_i* ≤ inf_x f(x, ξ_i)`.
    pub per_sample_infimum: Vec<T>,
    pub per_sample_value_at_opt: Vec<T>,
    pub f_at_opt: T,
    /// Every `s_i` is exactly zero.
    pub interpolating: bool,
    /// Orthonormal rows spanning rowspace(A) when A is column-rank deficient.
    /// Distances to the solution set are measured after projecting onto it.
    pub rowspace_basis: Option<Matrix<T>>,
}

#[derive(Clone, Debug)]
pub struct FiniteSumProblem<T> {
    payload: Payload<T>,
    row_norms_sq: Vec<T>,
    optimum: Option<OptimumInfo<T>>,
}

/// Quantities of a sampled minibatch computed in one pass.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats<T> {
    pub n: usize,
    /// `ḡ = (1/n) Σ g_i`
    pub mean_grad: Vec<T>,
    /// `‖ḡ‖²`
    pub mean_grad_norm_sq: T,
    /// `(1/n) Σ ‖g_i‖²`
    pub mean_sq_norm: T,
    /// `(1/n) Σ f(x, ξ_i)`
    pub mean_value: T,
    /// `(1/n) Σ f_i^k` with the problem's per-sample lower bounds.
    pub mean_lower_bound: T,
    pub corrected: Option<CorrectedStats<T>>,
}

/// Optimum-corrected batch quantities, available when the problem carries
/// an [`OptimumInfo`].
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectedStats<T> {
    /// `(1/n) Σ (g_i − s_i)`
    pub mean_grad: Vec<T>,
    pub mean_grad_norm_sq: T,
    /// `(1/n) Σ ‖g_i − s_i‖²`
    pub mean_sq_norm: T,
    /// `(1/n) Σ [f(x, ξ_i) − f(x*, ξ_i) − ⟨s_i, x − x*⟩]`
    pub mean_gap: T,
    /// `(1/n) Σ f(x*, ξ_i)`
    pub mean_value_at_opt: T,
}

fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> FiniteSumProblem<T> {
    pub fn least_squares(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        Self::check_data(&a, &b)?;
        let row_norms_sq: Vec<T> = a.iter_rows().map(norm_sq).collect();
        let tol = T::lit(ROW_NORM_TOL);
        let rows_normalized = row_norms_sq.iter().all(|r| (*r - T::one()).abs() <= tol);
        Ok(Self {
            payload: Payload::LeastSquares(LeastSquaresPayload {
                a,
                b,
                rows_normalized,
            }),
            row_norms_sq,
            optimum: None,
        })
    }

    pub fn logistic(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        Self::check_data(&a, &b)?;
        if let Some(bad) = b.iter().find(|v| **v != T::zero() && **v != T::one()) {
            return Err(Error::Config(format!(
                "logistic labels must be exactly 0 or 1, found {bad}"
            )));
        }
        let row_norms_sq = a.iter_rows().map(norm_sq).collect();
        Ok(Self {
            payload: Payload::Logistic(LogisticPayload { a, b }),
            row_norms_sq,
            optimum: None,
        })
    }

    fn check_data(a: &Matrix<T>, b: &[T]) -> Result<()> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidSize(format!(
                "data matrix must be at least 1x1, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !a.all_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("problem data"));
        }
        Ok(())
    }

    pub fn kind(&self) -> ProblemKind {
        match self.payload {
            Payload::LeastSquares(_) => ProblemKind::LeastSquares,
            Payload::Logistic(_) => ProblemKind::Logistic,
        }
    }

    pub fn payload(&self) -> &Payload<T> {
        &self.payload
    }

    pub fn matrix(&self) -> &Matrix<T> {
        match &self.payload {
            Payload::LeastSquares(p) => &p.a,
            Payload::Logistic(p) => &p.a,
        }
    }

    pub fn targets(&self) -> &[T] {
        match &self.payload {
            Payload::LeastSquares(p) => &p.b,
            Payload::Logistic(p) => &p.b,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.matrix().rows()
    }

    pub fn dimension(&self) -> usize {
        self.matrix().cols()
    }

    pub fn rows_normalized(&self) -> bool {
        match &self.payload {
            Payload::LeastSquares(p) => p.rows_normalized,
            Payload::Logistic(_) => false,
        }
    }

    pub fn row_norms_sq(&self) -> &[T] {
        &self.row_norms_sq
    }

    pub fn optimum(&self) -> Option<&OptimumInfo<T>> {
        self.optimum.as_ref()
    }

    pub fn set_optimum(&mut self, info: OptimumInfo<T>) -> Result<()> {
        if info.x_star.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: info.x_star.len(),
            });
        }
        self.optimum = Some(info);
        Ok(())
    }

    pub fn with_optimum(mut self, info: OptimumInfo<T>) -> Result<Self> {
        self.set_optimum(info)?;
        Ok(self)
    }

    /// Loss of sample `i` as a function of `z = a_iᵀx`.
    #[inline]
    fn loss_at(&self, i: usize, z: T) -> T {
        match &self.payload {
            Payload::LeastSquares(p) => {
                let r = z - p.b[i];
                T::lit(0.5) * r * r
            }
            Payload::Logistic(p) => {
                if p.b[i] == T::one() {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            }
        }
    }

    /// `∂f(x, ξ_i)/∂z` so that `∇f(x, ξ_i) = residual · a_i`.
    #[inline]
    fn residual_at(&self, i: usize, z: T) -> T {
        match &self.payload {
            Payload::LeastSquares(p) => z - p.b[i],
            Payload::Logistic(p) => sigmoid(z) - p.b[i],
        }
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("iterate"));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.sample_count() {
            return Err(Error::IndexOutOfRange {
                index: i,
                count: self.sample_count(),
            });
        }
        Ok(())
    }

    pub fn per_sample_value(&self, x: &[T], i: usize) -> Result<T> {
        self.check_point(x)?;
        self.check_index(i)?;
        Ok(self.loss_at(i, dot(self.matrix().row(i), x)))
    }

    pub fn per_sample_gradient(&self, x: &[T], i: usize) -> Result<Vec<T>> {
        self.check_point(x)?;
        self.check_index(i)?;
        let row = self.matrix().row(i);
        let r = self.residual_at(i, dot(row, x));
        Ok(row.iter().map(|a| r * *a).collect())
    }

    /// Lower bound `f_i^k` used by the practical Polyak-type rules: the
    /// oracle infimum when an optimum is attached, otherwise 0.
    pub fn per_sample_lower_bound(&self, i: usize) -> T {
        self.optimum
            .as_ref()
            .map_or_else(T::zero, |o| o.per_sample_infimum[i])
    }

    pub fn batch_stats(&self, x: &[T], indices: &[usize]) -> Result<BatchStats<T>> {
        self.check_point(x)?;
        if indices.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for &i in indices {
            self.check_index(i)?;
        }
        let d = self.dimension();
        let a = self.matrix();
        let n = T::of_usize(indices.len());

        let mut grad_sum = vec![T::zero(); d];
        let mut sq_sum = T::zero();
        let mut value_sum = T::zero();
        let mut lower_sum = T::zero();
        let mut residuals = Vec::with_capacity(indices.len());
        let mut values = Vec::with_capacity(indices.len());
        for &i in indices {
            let row = a.row(i);
            let z = dot(row, x);
            let r = self.residual_at(i, z);
            let v = self.loss_at(i, z);
            axpy(r, row, &mut grad_sum);
            sq_sum += self.row_norms_sq[i] * r * r;
            value_sum += v;
            lower_sum += self.per_sample_lower_bound(i);
            residuals.push(r);
            values.push(v);
        }
        let mean_grad: Vec<T> = grad_sum.iter().map(|g| *g / n).collect();
        let mean_grad_norm_sq = norm_sq(&mean_grad);
        let mean_sq_norm = sq_sum / n;
        let mean_value = value_sum / n;

        let corrected = self.optimum.as_ref().map(|opt| {
            let value_at_opt_sum: T = indices.iter().map(|&i| opt.per_sample_value_at_opt[i]).sum();
            if opt.interpolating {
                let gap_sum = indices
                    .iter()
                    .zip(&values)
                    .fold(T::zero(), |acc, (&i, v)| acc + (*v - opt.per_sample_value_at_opt[i]));
                return CorrectedStats {
                    mean_grad: mean_grad.clone(),
                    mean_grad_norm_sq,
                    mean_sq_norm,
                    mean_gap: gap_sum / n,
                    mean_value_at_opt: value_at_opt_sum / n,
                };
            }
            let mut corr_sum = vec![T::zero(); d];
            let mut corr_sq_sum = T::zero();
            let mut gap_sum = T::zero();
            for ((&i, &r), &v) in indices.iter().zip(&residuals).zip(&values) {
                let row = a.row(i);
                let s = opt.per_sample_grad_at_opt.row(i);
                let mut norm = T::zero();
                let mut inner = T::zero();
                for j in 0..d {
                    let c = r * row[j] - s[j];
                    corr_sum[j] += c;
                    norm += c * c;
                    inner += s[j] * (x[j] - opt.x_star[j]);
                }
                corr_sq_sum += norm;
                gap_sum += v - opt.per_sample_value_at_opt[i] - inner;
            }
            let mean: Vec<T> = corr_sum.iter().map(|c| *c / n).collect();
            CorrectedStats {
                mean_grad_norm_sq: norm_sq(&mean),
                mean_grad: mean,
                mean_sq_norm: corr_sq_sum / n,
                mean_gap: gap_sum / n,
                mean_value_at_opt: value_at_opt_sum / n,
            }
        });

        Ok(BatchStats {
            n: indices.len(),
            mean_grad,
            mean_grad_norm_sq,
            mean_sq_norm,
            mean_value,
            mean_lower_bound: lower_sum / n,
            corrected,
        })
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.sample_count()).collect()
    }

    pub fn full_stats(&self, x: &[T]) -> Result<BatchStats<T>> {
        self.batch_stats(x, &self.all_indices())
    }

    pub fn full_value(&self, x: &[T]) -> Result<T> {
        self.check_point(x)?;
        let a = self.matrix();
        let sum: T = (0..self.sample_count())
            .map(|i| self.loss_at(i, dot(a.row(i), x)))
            .sum();
        Ok(sum / T::of_usize(self.sample_count()))
    }

    pub fn full_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.full_stats(x)?.mean_grad)
    }

    /// Squared distance from `x` to the solution set, or `None` without an
    /// optimum. For rank-deficient least squares the solution set is the
    /// affine space `x* + null(A)`.
    pub fn solution_dist_sq(&self, x: &[T]) -> Option<T> {
        let opt = self.optimum.as_ref()?;
        let diff: Vec<T> = x.iter().zip(&opt.x_star).map(|(a, b)| *a - *b).collect();
        Some(match &opt.rowspace_basis {
            Some(basis) => basis
                .iter_rows()
                .map(|v| {
                    let c = dot(v, &diff);
                    c * c
                })
                .sum(),
            None => norm_sq(&diff),
        })
    }
}

/// Eigenvalue cutoff separating the numerical null space.
pub(crate) fn rank_tolerance<T: Scalar>(max_eig: T, rows: usize, cols: usize) -> T {
    max_eig * T::of_usize(rows.max(cols)) * T::epsilon() * T::lit(16.0)
}

/// Orthonormal basis of rowspace(A) when A has deficient column rank.
fn rowspace_basis<T: Scalar>(a: &Matrix<T>) -> Result<Option<Matrix<T>>> {
    let (rows, cols) = (a.rows(), a.cols());
    if cols <= rows {
        let eig = SymmetricEigen::jacobi(&a.gram_cols())?;
        let tol = rank_tolerance(eig.max_value(), rows, cols);
        let keep: Vec<usize> = (0..cols).filter(|&k| eig.values[k] > tol).collect();
        if keep.len() == cols {
            return Ok(None);
        }
        let mut basis = Matrix::zeros(keep.len(), cols);
        for (r, &k) in keep.iter().enumerate() {
            basis.row_mut(r).copy_from_slice(eig.vectors.row(k));
        }
        Ok(Some(basis))
    } else {
        // Right singular vectors from the row Gram matrix: v = Aᵀu / √λ.
        let eig = SymmetricEigen::jacobi(&a.gram_rows())?;
        let tol = rank_tolerance(eig.max_value(), rows, cols);
        let keep: Vec<usize> = (0..rows).filter(|&k| eig.values[k] > tol).collect();
        let mut basis = Matrix::zeros(keep.len(), cols);
        for (r, &k) in keep.iter().enumerate() {
            let mut v = a.tr_mul_vec(eig.vectors.row(k));
            let norm = norm_sq(&v).sqrt();
            v.iter_mut().for_each(|c| *c /= norm);
            basis.row_mut(r).copy_from_slice(&v);
        }
        Ok(Some(basis))
    }
}

impl<T: Scalar> OptimumInfo<T> {
    /// Oracle information assembled at a known minimiser `x_star`, with
    /// per-sample infima `f_i* = 0` (a zero row has the constant loss as its
    /// infimum).
    pub fn at(problem: &FiniteSumProblem<T>, x_star: Vec<T>) -> Result<Self> {
        problem.check_point(&x_star)?;
        let n = problem.sample_count();
        let d = problem.dimension();
        let a = problem.matrix();
        let mut grads = Matrix::zeros(n, d);
        let mut values = Vec::with_capacity(n);
        let mut interpolating = true;
        for i in 0..n {
            let row = a.row(i);
            let z = dot(row, &x_star);
            let r = problem.residual_at(i, z);
            if r != T::zero() {
                interpolating = false;
            }
            for (g, ai) in grads.row_mut(i).iter_mut().zip(row) {
                *g = r * *ai;
            }
            values.push(problem.loss_at(i, z));
        }
        let f_at_opt = values.iter().copied().sum::<T>() / T::of_usize(n);
        let per_sample_infimum = (0..n)
            .map(|i| {
                if problem.row_norms_sq()[i] == T::zero() {
                    values[i]
                } else {
                    T::zero()
                }
            })
            .collect();
        let rowspace_basis = match problem.kind() {
            ProblemKind::LeastSquares => rowspace_basis(a)?,
            ProblemKind::Logistic => None,
        };
        Ok(Self {
            x_star,
            per_sample_grad_at_opt: grads,
            per_sample_infimum,
            per_sample_value_at_opt: values,
            f_at_opt,
            interpolating,
            rowspace_basis,
        })
    }
}

/// Oracle for planted or analytically solvable problems.
///
/// Returns the attached optimum when present. Otherwise least-squares
/// problems are solved for the minimum-norm minimiser `A⁺b` through the
/// eigen-decomposition of the smaller Gram matrix; logistic problems without
/// a planted optimum fail with [`Error::OptimumUnavailable`].
pub fn optimum_info_exact<T: Scalar>(problem: &FiniteSumProblem<T>) -> Result<OptimumInfo<T>> {
    if let Some(opt) = problem.optimum() {
        return Ok(opt.clone());
    }
    match problem.kind() {
        ProblemKind::Logistic => Err(Error::OptimumUnavailable(
            "logistic problem without a planted optimum; the infimum may be unattained".into(),
        )),
        ProblemKind::LeastSquares => {
            let a = problem.matrix();
            let b = problem.targets();
            if a.is_zero() {
                return Err(Error::ZeroMatrix);
            }
            let (rows, cols) = (a.rows(), a.cols());
            let x_star = if cols <= rows {
                let eig = SymmetricEigen::jacobi(&a.gram_cols())?;
                let tol = rank_tolerance(eig.max_value(), rows, cols);
                let atb = a.tr_mul_vec(b);
                let mut x = vec![T::zero(); cols];
                for k in 0..cols {
                    if eig.values[k] > tol {
                        let v = eig.vectors.row(k);
                        axpy(dot(v, &atb) / eig.values[k], v, &mut x);
                    }
                }
                x
            } else {
                let eig = SymmetricEigen::jacobi(&a.gram_rows())?;
                let tol = rank_tolerance(eig.max_value(), rows, cols);
                let mut w = vec![T::zero(); rows];
                for k in 0..rows {
                    if eig.values[k] > tol {
                        let u = eig.vectors.row(k);
                        axpy(dot(u, b) / eig.values[k], u, &mut w);
                    }
                }
                a.tr_mul_vec(&w)
            };
            OptimumInfo::at(problem, x_star)
        }
    }
}

fn normal_matrix<T: Scalar>(rng: &mut ExperimentRng, rows: usize, cols: usize, normalize: bool) -> Matrix<T> {
    let mut a = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            a.set(i, j, T::lit(rng.standard_normal()));
        }
    }
    if normalize {
        for i in 0..rows {
            let row = a.row_mut(i);
            let norm = norm_sq(row).sqrt();
            if norm > T::zero() {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
    a
}

fn check_sizes(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidSize(format!(
            "rows and cols must be at least 1, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Random consistent system `b = A x*` with standard-normal entries and a
/// planted standard-normal `x*`.
///
/// Draw order: the entries of `A` row by row, then `x*`.
pub fn generate_consistent_linear_system<T: Scalar>(
    rows: usize,
    cols: usize,
    seed: u64,
    normalize: bool,
) -> Result<FiniteSumProblem<T>> {
    generate_least_squares(rows, cols, seed, normalize, 0.0)
}

/// Least-squares instance `b = A x_p + noise · ε`. With `noise = 0` this is the
/// consistent planted system; otherwise the attached optimum is the
/// minimum-norm least-squares solution.
pub fn generate_least_squares<T: Scalar>(
    rows: usize,
    cols: usize,
    seed: u64,
    normalize: bool,
    noise: f64,
) -> Result<FiniteSumProblem<T>> {
    check_sizes(rows, cols)?;
    let mut rng = ExperimentRng::new(seed);
    let a = normal_matrix::<T>(&mut rng, rows, cols, normalize);
    let x_planted: Vec<T> = (0..cols).map(|_| T::lit(rng.standard_normal())).collect();
    let mut b = a.mul_vec(&x_planted);
    if noise != 0.0 {
        for bi in b.iter_mut() {
            *bi += T::lit(noise * rng.standard_normal());
        }
    }
    let problem = FiniteSumProblem::least_squares(a, b)?;
    let info = if noise == 0.0 {
        OptimumInfo::at(&problem, x_planted)?
    } else {
        optimum_info_exact(&problem)?
    };
    problem.with_optimum(info)
}

/// Logistic instance with labels `1[a_iᵀw > 0]` for a standard-normal `w`,
/// each label flipped independently with probability `flip`. No optimum is
/// attached.
pub fn generate_logistic<T: Scalar>(
    rows: usize,
    cols: usize,
    seed: u64,
    normalize: bool,
    flip: f64,
) -> Result<FiniteSumProblem<T>> {
    check_sizes(rows, cols)?;
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::Config(format!("label flip probability {flip} outside [0, 1]")));
    }
    let mut rng = ExperimentRng::new(seed);
    let a = normal_matrix::<T>(&mut rng, rows, cols, normalize);
    let w: Vec<T> = (0..cols).map(|_| T::lit(rng.standard_normal())).collect();
    let mut b: Vec<T> = a
        .mul_vec(&w)
        .into_iter()
        .map(|z| if z > T::zero() { T::one() } else { T::zero() })
        .collect();
    if flip > 0.0 {
        for bi in b.iter_mut() {
            if rng.uniform() < flip {
                *bi = T::one() - *bi;
            }
        }
    }
    FiniteSumProblem::logistic(a, b)
}
