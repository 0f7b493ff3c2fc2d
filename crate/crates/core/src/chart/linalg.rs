//! Small dense matrices and tensors over generic scalars.
//!
//! The entry type can be a plain float or a [`DualTower`], so inverses and
//! determinants computed here carry derivatives when evaluated in tower
//! arithmetic. Everything is desk-scale: row-major `Vec` storage, Gauss-Jordan
//! with partial pivoting, Cholesky for positive-definiteness tests.

use crate::chart::tower::DualTower;
use crate::scalar::Real;
use num_traits::{One, Zero};
use std::ops::{Add, Div, Index, IndexMut, Mul, Neg, Sub};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl<T: Clone> Mat<T> {
    pub fn filled(rows: usize, cols: usize, v: T) -> Self {
        Mat {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(v)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Clone + Zero + One> Mat<T> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::filled(rows, cols, T::zero())
    }
}

impl<F: Real> Mat<F> {
    pub fn max_abs(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: F) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Magnitude of the leading (value) part of an entry, used for pivot choice.
pub trait Pivot<F: Real> {
    fn pivot_magnitude(&self) -> F;
}

impl<F: Real> Pivot<F> for F {
    fn pivot_magnitude(&self) -> F {
        self.abs()
    }
}

impl<F: Real> Pivot<F> for DualTower<F> {
    fn pivot_magnitude(&self) -> F {
        self.value().abs()
    }
}

/// Inverse and determinant by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot degenerates relative to the matrix scale.
pub fn invert_with_det<F, T>(m: &Mat<T>) -> Option<(Mat<T>, T)>
where
    F: Real,
    T: Clone
        + Zero
        + One
        + Pivot<F>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>,
{
    let n = m.rows;
    if n != m.cols {
        return None;
    }
    let scale = m
        .data
        .iter()
        .fold(F::zero(), |acc, v| acc.max(v.pivot_magnitude()));
    if !(scale > F::zero()) || !scale.is_finite() {
        return None;
    }
    let mut a = m.clone();
    let mut inv: Mat<T> = Mat::identity(n);
    let mut det = T::one();
    let mut sign_flip = false;

    for col in 0..n {
        let mut pivot_row = col;
        let mut best = a[(col, col)].pivot_magnitude();
        for r in (col + 1)..n {
            let mag = a[(r, col)].pivot_magnitude();
            if mag > best {
                best = mag;
                pivot_row = r;
            }
        }
        if !(best > scale * F::epsilon()) {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.data.swap(col * n + j, pivot_row * n + j);
                inv.data.swap(col * n + j, pivot_row * n + j);
            }
            sign_flip = !sign_flip;
        }
        let pivot = a[(col, col)].clone();
        det = det * pivot.clone();
        for j in 0..n {
            a[(col, j)] = a[(col, j)].clone() / pivot.clone();
            inv[(col, j)] = inv[(col, j)].clone() / pivot.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[(r, col)].clone();
            if factor.pivot_magnitude() == F::zero() {
                continue;
            }
            for j in 0..n {
                a[(r, j)] = a[(r, j)].clone() - factor.clone() * a[(col, j)].clone();
                inv[(r, j)] = inv[(r, j)].clone() - factor.clone() * inv[(col, j)].clone();
            }
        }
    }
    if sign_flip {
        det = -det;
    }
    Some((inv, det))
}

/// Matrix-vector product for generic entries.
pub fn mat_vec<T>(m: &Mat<T>, v: &[T]) -> Vec<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    assert_eq!(m.cols, v.len());
    (0..m.rows)
        .map(|i| {
            let mut acc = T::zero();
            for j in 0..m.cols {
                acc = acc + m[(i, j)].clone() * v[j].clone();
            }
            acc
        })
        .collect()
}

/// Lower-triangular Cholesky factor; `None` when the matrix is not positive
/// definite. This is the positive-definiteness test used throughout.
pub fn cholesky<F: Real>(m: &Mat<F>) -> Option<Mat<F>> {
    let n = m.rows;
    if n != m.cols {
        return None;
    }
    let mut l: Mat<F> = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(s > F::zero()) || !s.is_finite() {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given a Cholesky factor `L`.
pub fn cholesky_solve<F: Real>(l: &Mat<F>, b: &[F]) -> Vec<F> {
    let n = l.rows;
    let mut y = vec![F::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Cubic rank-3 tensor, `n x n x n`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone + Zero> Tensor3<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }
}

impl<T> Tensor3<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        self.data[(i * self.n + j) * self.n + k] = v;
    }
}

impl<F: Real> Tensor3<F> {
    pub fn max_abs(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Cubic rank-4 tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone + Zero> Tensor4<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![T::zero(); n * n * n * n],
        }
    }
}

impl<T> Tensor4<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> &T {
        &self.data[((i * self.n + j) * self.n + k) * self.n + l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        self.data[((i * self.n + j) * self.n + k) * self.n + l] = v;
    }
}

impl<F: Real> Tensor4<F> {
    pub fn max_abs(&self) -> F {
        self.data
            .iter()
            .fold(F::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Fixed-order pairwise summation; deterministic and more accurate than a
/// running sum for long node lists.
pub fn pairwise_sum<F: Real>(xs: &[F]) -> F {
    match xs.len() {
        0 => F::zero(),
        1 => xs[0],
        n if n <= 8 => {
            let mut acc = xs[0];
            for &v in &xs[1..] {
                acc = acc + v;
            }
            acc
        }
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_det_2x2_closed_form() {
        // oracle: direct 2x2 matrix algebra
        let m = Mat::from_fn(2, 2, |i, j| if i == j { [4.0, 9.0][i] } else { 0.0 });
        let (inv, det) = invert_with_det::<f64, f64>(&m).unwrap();
        assert!((det - 36.0).abs() < 1e-12);
        assert!((inv[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((inv[(1, 1)] - 1.0 / 9.0).abs() < 1e-14);
        assert_eq!(inv[(0, 1)], 0.0);
    }

    #[test]
    fn inverse_residual_small() {
        let m = Mat::from_fn(3, 3, |i, j| {
            1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 }
        });
        let (inv, _) = invert_with_det::<f64, f64>(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[(i, k)] * inv[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Mat::from_fn(2, 2, |i, _| if i == 0 { 1.0 } else { 2.0 });
        assert!(invert_with_det::<f64, f64>(&m).is_none());
    }

    #[test]
    fn cholesky_detects_indefiniteness() {
        let pd = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        assert!(cholesky(&pd).is_some());
        let indef = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, -1.0][i] } else { 0.0 });
        assert!(cholesky(&indef).is_none());
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { 4.0 } else { 1.0 });
        let l = cholesky(&m).unwrap();
        let b = [1.0f64, 2.0, 3.0];
        let x = cholesky_solve(&l, &b);
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += m[(i, j)] * x[j];
            }
            assert!((s - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn tower_matrix_inverse_carries_derivatives() {
        // m(x) = [[1+x, 0], [0, 2]]; d/dx of m^{-1}[0][0] = -1/(1+x)^2
        use crate::chart::tower::DualTower;
        let x = DualTower::seeded(0.5f64, 0, 1);
        let m = Mat::from_fn(2, 2, |i, j| {
            if i == 0 && j == 0 {
                &x + 1.0
            } else if i == j {
                DualTower::constant(2.0)
            } else {
                DualTower::constant(0.0)
            }
        });
        let (inv, det) = invert_with_det::<f64, _>(&m).unwrap();
        assert!((det.value() - 3.0).abs() < 1e-14);
        assert!((inv[(0, 0)].value() - 1.0 / 1.5).abs() < 1e-14);
        assert!((inv[(0, 0)].first_at(0) + 1.0 / (1.5 * 1.5)).abs() < 1e-13);
        assert!((det.first_at(0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pairwise_sum_matches_plain_sum() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let a = pairwise_sum(&xs);
        let b: f64 = xs.iter().sum();
        assert!((a - b).abs() < 1e-9);
    }
}
