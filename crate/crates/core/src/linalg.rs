//! Dense row-major matrices, vector kernels and a cyclic Jacobi eigensolver
//! for symmetric matrices.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        self.iter_rows().map(|row| dot(row, x)).collect()
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (row, &yi) in self.iter_rows().zip(y) {
            axpy(yi, row, &mut out);
        }
        out
    }

    /// `AᵀA` (cols × cols).
    pub fn gram_cols(&self) -> Matrix<T> {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for row in self.iter_rows() {
            for p in 0..n {
                let rp = row[p];
                if rp == T::zero() {
                    continue;
                }
                let out = &mut g.data[p * n..(p + 1) * n];
                for q in p..n {
                    out[q] += rp * row[q];
                }
            }
        }
        for p in 0..n {
            for q in 0..p {
                let v = g.get(q, p);
                g.set(p, q, v);
            }
        }
        g
    }

    /// `AAᵀ` (rows × rows).
    pub fn gram_rows(&self) -> Matrix<T> {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for p in 0..n {
            for q in p..n {
                let v = dot(self.row(p), self.row(q));
                g.set(p, q, v);
                g.set(q, p, v);
            }
        }
        g
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[inline]
pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

pub fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
}

/// Eigen-decomposition of a symmetric matrix.
///
/// `values` are sorted ascending; row `k` of `vectors` is the unit eigenvector
/// belonging to `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

const MAX_SWEEPS: usize = 100;

impl<T: Scalar> SymmetricEigen<T> {
    /// Cyclic Jacobi rotations with thresholding on the first sweeps.
    ///
    /// Only the upper triangle of `a` is read.
    pub fn jacobi(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n != a.cols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.cols(),
            });
        }
        let mut a = a.clone();
        let mut v = Matrix::identity(n);
        let mut d: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
        let mut b = d.clone();
        let mut z = vec![T::zero(); n];
        let hundred = T::lit(100.0);
        let fifth = T::lit(0.2);
        let half = T::lit(0.5);

        let mut converged = n <= 1;
        for sweep in 1..=MAX_SWEEPS {
            if converged {
                break;
            }
            let mut off = T::zero();
            for p in 0..n {
                for q in p + 1..n {
                    off += a.get(p, q).abs();
                }
            }
            if off == T::zero() {
                converged = true;
                break;
            }
            let tresh = if sweep < 4 {
                fifth * off / T::of_usize(n * n)
            } else {
                T::zero()
            };
            for p in 0..n.saturating_sub(1) {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    let g = hundred * apq.abs();
                    if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                        a.set(p, q, T::zero());
                        continue;
                    }
                    if apq.abs() <= tresh {
                        continue;
                    }
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = half * h / apq;
                        let t = T::one() / (theta.abs() + (T::one() + theta * theta).sqrt());
                        if theta < T::zero() {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (T::one() + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a.set(p, q, T::zero());
                    let rotate = |m: &mut Matrix<T>, i: usize, j: usize, k: usize, l: usize| {
                        let g = m.get(i, j);
                        let h = m.get(k, l);
                        m.set(i, j, g - s * (h + g * tau));
                        m.set(k, l, h + s * (g - h * tau));
                    };
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q);
                    }
                    for j in p + 1..q {
                        rotate(&mut a, p, j, j, q);
                    }
                    for j in q + 1..n {
                        rotate(&mut a, p, j, q, j);
                    }
                    for j in 0..n {
                        rotate(&mut v, j, p, j, q);
                    }
                }
            }
            for p in 0..n {
                b[p] += z[p];
                d[p] = b[p];
                z[p] = T::zero();
            }
        }
        if !converged {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for j in 0..n {
                vectors.set(dst, j, v.get(j, src));
            }
        }
        Ok(Self { values, vectors })
    }

    pub fn max_value(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }
}
