//! Cyclic Jacobi eigensolver for symmetric matrices and the loading sign rule.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by descending eigenvalue; column `h` of `vectors` pairs with `values[h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
    pub sweeps: usize,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, h: usize) -> Vec<T> {
        self.vectors.column(h)
    }

    /// `U Λ Uᵀ`
    pub fn reconstruct(&self) -> Matrix<T> {
        let p = self.dim();
        Matrix::from_fn(p, p, |i, j| (0..p).map(|h| self.vectors[(i, h)] * self.values[h] * self.vectors[(j, h)]).sum())
    }

    /// Largest deviation of `UᵀU` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let gram = self.vectors.transpose().matmul(&self.vectors).expect("square");
        gram.max_abs_diff(&Matrix::identity(self.dim()))
    }
}

fn max_off_diagonal<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(a[(i, j)].abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps over the strict upper triangle until every off-diagonal entry falls
/// below `1e-12` (scaled up by the matrix norm for large entries) or the sweep
/// budget is exhausted. Eigenpairs are sorted by descending eigenvalue with a
/// stable sort, so equal eigenvalues keep their original column order.
pub fn symmetric_eigen<T: Scalar>(w: &Matrix<T>) -> Result<EigenDecomposition<T>> {
    if !w.is_square() {
        return Err(Error::ShapeMismatch(format!("{}x{} is not square", w.rows(), w.cols())));
    }
    let n = w.rows();
    let scale = w.frobenius_norm();
    if !scale.is_finite() {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let asymmetry = w.max_asymmetry();
    if asymmetry > T::tol(SYMMETRY_TOL) * scale.max(T::one()) {
        return Err(Error::NotSymmetric { asymmetry: asymmetry.to_f64_lossy() });
    }

    let mut a = w.clone();
    // symmetrise so rotations only need the upper triangle to be meaningful
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (a[(i, j)] + a[(j, i)]) / T::lit(2.0);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let tol = T::tol(OFF_DIAGONAL_TOL).max(T::epsilon() * scale);

    let mut sweeps = 0;
    while max_off_diagonal(&a) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: max_off_diagonal(&a).to_f64_lossy() });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap_or(Ordering::Equal));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let mut vectors = Matrix::from_fn(n, n, |i, h| v[(i, order[h])]);
    for h in 0..n {
        let norm = (0..n).map(|i| vectors[(i, h)] * vectors[(i, h)]).sum::<T>().sqrt();
        for i in 0..n {
            vectors[(i, h)] /= norm;
        }
    }
    Ok(EigenDecomposition { values, vectors, sweeps })
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate<T: Scalar>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == T::zero() {
        return;
    }
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
    let t = if theta.abs().is_infinite() || theta.abs() > T::lit(1e150) {
        T::one() / (T::lit(2.0) * theta)
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = T::zero();
    a[(q, p)] = T::zero();
    for k in 0..n {
        if k != p && k != q {
            let (akp, akq) = (a[(k, p)], a[(k, q)]);
            let new_p = c * akp - s * akq;
            let new_q = s * akp + c * akq;
            a[(k, p)] = new_p;
            a[(p, k)] = new_p;
            a[(k, q)] = new_q;
            a[(q, k)] = new_q;
        }
    }
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Index of the largest-magnitude entry; magnitudes equal up to rounding count
/// as ties and resolve to the smallest index.
pub fn dominant_index<T: Scalar>(u: &[T]) -> usize {
    let tie = T::tol(1e-12);
    let mut best = 0;
    for (j, x) in u.iter().enumerate().skip(1) {
        if x.abs() > u[best].abs() * (T::one() + tie) {
            best = j;
        }
    }
    best
}

/// Flips an eigenvector so its dominant loading is positive.
pub fn orient_vector<T: Scalar>(u: &mut [T]) {
    if u.is_empty() {
        return;
    }
    if u[dominant_index(u)] < T::zero() {
        for x in u.iter_mut() {
            *x = -*x;
        }
    }
}

/// Applies [`orient_vector`] to every eigenvector of the decomposition.
pub fn orient_signs<T: Scalar>(mut dec: EigenDecomposition<T>) -> EigenDecomposition<T> {
    let p = dec.dim();
    for h in 0..p {
        let mut u = dec.vector(h);
        orient_vector(&mut u);
        for (i, x) in u.into_iter().enumerate() {
            dec.vectors[(i, h)] = x;
        }
    }
    dec
}
