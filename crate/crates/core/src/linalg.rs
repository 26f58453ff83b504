//! Small dense real linear algebra: symmetric eigensolvers, Cholesky and
//! LU solves. Everything here is real; all overlaps produced by the
//! encoding pipeline are real and nonnegative.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| f64::max(acc, libm::fabs(a - b)))
    }

    /// Largest asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max(libm::fabs(self[(i, j)] - self[(j, i)]));
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Gram matrix `G_ij = <v_i|v_j>` of the given vectors.
    pub fn gram_of(vectors: &[Vec<f64>]) -> Matrix {
        let n = vectors.len();
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&vectors[i], &vectors[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Kronecker product of two vectors.
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigendecomposition. Accurate for the small Gram matrices
/// used when constructing states; quadratic convergence once off-diagonal
/// mass is small.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = m.as_slice().iter().fold(0.0f64, |acc, x| acc.max(libm::fabs(*x)));
    if n > 1 && scale > 0.0 {
        let mut converged = false;
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..i {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
            if libm::sqrt(off) <= 1e-300 || libm::sqrt(off) <= f64::EPSILON * 1e-3 * scale {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if libm::fabs(apq) <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = {
                        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                        sign / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0))
                    };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[(k, p)];
                        let mkq = m[(k, q)];
                        m[(k, p)] = c * mkp - s * mkq;
                        m[(k, q)] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[(p, k)];
                        let mqk = m[(q, k)];
                        m[(p, k)] = c * mpk - s * mqk;
                        m[(q, k)] = s * mpk + c * mqk;
                    }
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        if !converged {
            return Err(Error::EigenFailure);
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues (descending) of a symmetric matrix via Householder
/// tridiagonalisation and implicit QL. Consumes the matrix; only the lower
/// triangle is read.
pub fn symmetric_eigenvalues(mut a: Matrix) -> Result<Vec<f64>> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(&mut a);
    drop(a);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(|x, y| y.total_cmp(x));
    Ok(d)
}

/// Householder reduction to tridiagonal form. Returns the diagonal `d` and
/// subdiagonal `e` with `e[i]` coupling `i-1` and `i` (`e[0] = 0`).
fn tridiagonalize(a: &mut Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let m = i;
        d[i] = a[(i, i)];
        if m == 1 {
            e[i] = a[(i, 0)];
            continue;
        }
        v[..m].copy_from_slice(&a.row(i)[..m]);
        let scale: f64 = v[..m].iter().map(|x| libm::fabs(*x)).sum();
        if scale == 0.0 {
            e[i] = 0.0;
            continue;
        }
        for x in &mut v[..m] {
            *x /= scale;
        }
        let sq: f64 = dot(&v[..m], &v[..m]);
        let f = v[m - 1];
        let g = if f >= 0.0 { -libm::sqrt(sq) } else { libm::sqrt(sq) };
        e[i] = scale * g;
        // H = |v|^2 / 2 after v[m-1] -= g
        let h = sq - f * g;
        v[m - 1] = f - g;

        // p = A v / h using the lower triangle only.
        for x in &mut p[..m] {
            *x = 0.0;
        }
        for j in 0..m {
            let row = &a.row(j)[..j];
            let vj = v[j];
            let mut acc = a[(j, j)] * vj;
            for (k, &ajk) in row.iter().enumerate() {
                acc += ajk * v[k];
                p[k] += ajk * vj;
            }
            p[j] += acc;
        }
        for x in &mut p[..m] {
            *x /= h;
        }
        let kk = dot(&v[..m], &p[..m]) / (2.0 * h);
        for k in 0..m {
            p[k] -= kk * v[k];
        }
        // A <- A - v q^T - q v^T (lower triangle), scaled back by scale^0:
        // v was scaled, but v q^T with q = A v / h is scale-invariant.
        for j in 0..m {
            let (vj, qj) = (v[j], p[j]);
            let row = &mut a.row_mut(j)[..=j];
            for (k, ajk) in row.iter_mut().enumerate() {
                *ajk -= vj * p[k] + qj * v[k];
            }
        }
    }
    d[0] = a[(0, 0)];
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal
/// matrix. On return `d` holds the eigenvalues (unsorted).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::EigenFailure);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[(i, i)] = libm::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solve `A x = b` by LU with partial pivoting. `None` when a pivot falls
/// below `pivot_tol` times the largest entry of `A`.
pub fn solve(a: &Matrix, b: &[f64], pivot_tol: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    assert!(a.is_square() && b.len() == n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(libm::fabs(*v)));
    if n == 0 {
        return Some(x);
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, libm::fabs(m[(r, col)])))
            .fold((col, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best <= pivot_tol * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(piv, k)];
                m[(piv, k)] = tmp;
            }
            x.swap(col, piv);
        }
        let inv = 1.0 / m[(col, col)];
        for r in (col + 1)..n {
            let factor = m[(r, col)] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[(r, k)] -= factor * m[(col, k)];
            }
            x[r] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in (col + 1)..n {
            s -= m[(col, k)] * x[k];
        }
        x[col] = s / m[(col, col)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = random_symmetric(7, 3);
        let eig = symmetric_eigen(&a).unwrap();
        let lambda = Matrix::from_fn(7, 7, |i, j| if i == j { eig.values[i] } else { 0.0 });
        let back = eig.vectors.mul(&lambda).mul(&eig.vectors.transpose());
        assert!(back.max_abs_diff(&a) < 1e-12);
        let vtv = eig.vectors.transpose().mul(&eig.vectors);
        assert!(vtv.max_abs_diff(&Matrix::identity(7)) < 1e-12);
    }

    #[test]
    fn tridiagonal_route_matches_jacobi() {
        for (n, seed) in [(1, 1), (2, 2), (3, 9), (10, 4), (33, 5)] {
            let a = random_symmetric(n, seed);
            let jac = symmetric_eigen(&a).unwrap().values;
            let ql = symmetric_eigenvalues(a).unwrap();
            for (x, y) in jac.iter().zip(&ql) {
                assert!((x - y).abs() < 1e-11, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn eigenvalues_of_rank_one() {
        let a = Matrix::filled(5, 5, 1.0);
        let ev = symmetric_eigenvalues(a).unwrap();
        assert!((ev[0] - 5.0).abs() < 1e-12);
        assert!(ev[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn cholesky_two_by_two() {
        let c = libm::sqrt(3.0) / 2.0;
        let g = Matrix::from_rows(2, 2, vec![1.0, c, c, 1.0]);
        let l = cholesky(&g).unwrap();
        assert!((l[(1, 0)] - c).abs() < 1e-15);
        assert!((l[(1, 1)] - 0.5).abs() < 1e-15);
        assert!(cholesky(&Matrix::filled(2, 2, 1.0)).is_none());
    }

    #[test]
    fn lu_solve_and_singular() {
        let a = Matrix::from_rows(3, 3, vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let x = solve(&a, &[3.0, 5.0, 5.0], 1e-14).unwrap();
        for (xi, e) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - e).abs() < 1e-14);
        }
        let s = Matrix::from_rows(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(solve(&s, &[1.0, 2.0], 1e-12).is_none());
    }
}
