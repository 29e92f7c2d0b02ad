//! Dense real matrix kernels: Gram-Schmidt QR, one-sided Jacobi SVD,
//! pseudoinverse, cyclic Jacobi eigensolver and Cholesky.
//!
//! Everything in the Bochner layer eventually reduces to small dense
//! problems, and those are all routed through this module. Matrices are
//! stored row-major and indexed from zero.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use thiserror::Error;

/// Relative tolerance used for rank decisions when the caller gives none.
pub const DEFAULT_RTOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DenseError {
    #[error("column {column} is numerically dependent (residual {residual:e}, original norm {original:e})")]
    RankDeficient {
        column: usize,
        residual: f64,
        original: f64,
    },
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("matrix is not symmetric positive definite (failed at pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("non-finite entry in dense matrix")]
    NonFinite,
}

#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: nrows,
            cols: ncols,
            data,
        }
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

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "column length does not match row count");
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
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

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(
            self.cols, other.rows,
            "inner dimensions differ: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape());
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape());
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Frobenius norm.
    pub fn norm_l2(&self) -> f64 {
        norm2(&self.data)
    }

    /// Largest absolute entry (Chebyshev norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), self.cols, |i, j| self[(rows[i], j)])
    }

    /// The leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Thin QR factorisation with `R` upper triangular and positive on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

pub fn qr(m: &DenseMatrix) -> Result<DenseQr, DenseError> {
    qr_with_tol(m, DEFAULT_RTOL)
}

/// Classical Gram-Schmidt with a second orthogonalisation pass.
///
/// Fails with [`DenseError::RankDeficient`] as soon as a column's residual
/// drops to `rtol` times its original norm.
pub fn qr_with_tol(m: &DenseMatrix, rtol: f64) -> Result<DenseQr, DenseError> {
    let (rows, cols) = m.shape();
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut r = DenseMatrix::zeros(cols, cols);
    for j in 0..cols {
        let mut v = m.column(j);
        let original = norm2(&v);
        for _pass in 0..2 {
            for (i, qi) in q_cols.iter().enumerate() {
                let c = dot(qi, &v);
                r[(i, j)] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let residual = norm2(&v);
        if residual <= rtol * original || residual == 0.0 {
            return Err(DenseError::RankDeficient {
                column: j,
                residual,
                original,
            });
        }
        r[(j, j)] = residual;
        v.iter_mut().for_each(|x| *x /= residual);
        q_cols.push(v);
    }
    Ok(DenseQr {
        q: DenseMatrix::from_columns(rows, &q_cols),
        r,
    })
}

/// Compact SVD `M = U diag(sigma) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl DenseSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let us = DenseMatrix::from_fn(self.u.rows(), self.rank(), |i, j| {
            self.u[(i, j)] * self.sigma[j]
        });
        us.matmul(&self.v.transpose())
    }
}

pub fn svd(m: &DenseMatrix) -> Result<DenseSvd, DenseError> {
    svd_with_tol(m, DEFAULT_RTOL)
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Singular values at or below `rtol * sigma_1` are dropped, so the result
/// is the compact SVD of the numerical-rank part.
pub fn svd_with_tol(m: &DenseMatrix, rtol: f64) -> Result<DenseSvd, DenseError> {
    if !m.is_finite() {
        return Err(DenseError::NonFinite);
    }
    if m.max_abs() == 0.0 {
        return Err(DenseError::ZeroMatrix);
    }
    if m.rows() < m.cols() {
        let t = svd_with_tol(&m.transpose(), rtol)?;
        return Ok(DenseSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (rows, cols) = m.shape();
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let sigma_max = norms[order[0]];
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&j| norms[j] > rtol * sigma_max && norms[j] > 0.0)
        .collect();

    let sigma: Vec<f64> = kept.iter().map(|&j| norms[j]).collect();
    let u_cols: Vec<Vec<f64>> = kept
        .iter()
        .map(|&j| w[j].iter().map(|x| x / norms[j]).collect())
        .collect();
    let v_cols: Vec<Vec<f64>> = kept.iter().map(|&j| v[j].clone()).collect();
    Ok(DenseSvd {
        u: DenseMatrix::from_columns(rows, &u_cols),
        sigma,
        v: DenseMatrix::from_columns(cols, &v_cols),
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let wp = &mut left[p];
    let wq = &mut right[0];
    for (a, b) in wp.iter_mut().zip(wq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Moore-Penrose pseudoinverse through the compact SVD.
///
/// The zero matrix maps to the zero matrix of transposed shape.
pub fn pinv(m: &DenseMatrix, rtol: f64) -> DenseMatrix {
    match svd_with_tol(m, rtol) {
        Ok(s) => {
            let v_scaled =
                DenseMatrix::from_fn(s.v.rows(), s.rank(), |i, j| s.v[(i, j)] / s.sigma[j]);
            v_scaled.matmul(&s.u.transpose())
        }
        Err(_) => DenseMatrix::zeros(m.cols(), m.rows()),
    }
}

/// Number of singular values above `rtol * sigma_1`.
pub fn numerical_rank(m: &DenseMatrix, rtol: f64) -> usize {
    svd_with_tol(m, rtol).map_or(0, |s| s.rank())
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in non-increasing order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: DenseMatrix,
}

/// Cyclic two-sided Jacobi eigensolver for symmetric matrices.
pub fn symmetric_eigen(m: &DenseMatrix) -> SymmetricEigen {
    assert_eq!(m.rows(), m.cols(), "eigen-decomposition needs a square matrix");
    let n = m.rows();
    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total: f64 = a.as_slice().iter().map(|x| x * x).sum();
        if off <= f64::EPSILON * f64::EPSILON * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]).then(x.cmp(&y)));
    SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: v.select_columns(&order),
    }
}

/// Number of eigenvalues of a symmetric positive semidefinite matrix above
/// `rtol` times the largest one.
pub fn psd_rank(m: &DenseMatrix, rtol: f64) -> usize {
    let eig = symmetric_eigen(m);
    let top = eig.values.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eig.values.iter().filter(|&&l| l > rtol * top).count()
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix, DenseError> {
    assert_eq!(m.rows(), m.cols(), "Cholesky needs a square matrix");
    let n = m.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(DenseError::NotPositiveDefinite(j));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_defect(q: &DenseMatrix) -> f64 {
        q.t_matmul(q).sub(&DenseMatrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn qr_of_identity_is_identity() {
        let i3 = DenseMatrix::identity(3);
        let f = qr(&i3).unwrap();
        assert_eq!(f.q, i3);
        assert_eq!(f.r, i3);
    }

    #[test]
    fn qr_single_column_three_four_five() {
        let m = DenseMatrix::from_rows(&[[3.0], [4.0]]);
        let f = qr(&m).unwrap();
        assert!((f.q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((f.q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((f.r[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn qr_random_tall() {
        let m = random(20, 5, 1);
        let f = qr(&m).unwrap();
        assert!(orthonormality_defect(&f.q) <= 1e-12);
        assert!(m.sub(&f.q.matmul(&f.r)).norm_l2() <= 1e-12 * m.norm_l2());
        for i in 0..5 {
            assert!(f.r[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
        assert_eq!(f, qr(&m).unwrap());
    }

    #[test]
    fn qr_rejects_dependent_columns() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        assert!(matches!(
            qr(&m),
            Err(DenseError::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn svd_diagonal() {
        let s = svd(&DenseMatrix::diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(s.sigma, vec![3.0, 1.0]);
    }

    #[test]
    fn svd_rank_one() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]);
        let s = svd(&m).unwrap();
        assert_eq!(s.sigma, vec![1.0]);
        assert_eq!(s.u, DenseMatrix::from_rows(&[[1.0], [0.0]]));
        assert_eq!(s.v, DenseMatrix::from_rows(&[[1.0], [0.0]]));
    }

    #[test]
    fn svd_of_zero_is_error() {
        assert_eq!(svd(&DenseMatrix::zeros(2, 3)), Err(DenseError::ZeroMatrix));
    }

    #[test]
    fn svd_reconstructs_wide_and_tall() {
        for (r, c, seed) in [(8, 6, 2), (6, 8, 3), (1, 4, 4), (5, 1, 5)] {
            let m = random(r, c, seed);
            let s = svd(&m).unwrap();
            assert!(m.sub(&s.reconstruct()).norm_l2() <= 1e-12 * m.norm_l2());
            assert!(orthonormality_defect(&s.u) <= 1e-12);
            assert!(orthonormality_defect(&s.v) <= 1e-12);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn pinv_scalar_and_zero() {
        let p = pinv(&DenseMatrix::from_rows(&[[2.0]]), DEFAULT_RTOL);
        assert_eq!(p, DenseMatrix::from_rows(&[[0.5]]));
        assert_eq!(pinv(&DenseMatrix::zeros(2, 3), DEFAULT_RTOL), DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn pinv_four_identities_full_rank() {
        let m = random(5, 3, 9);
        let p = pinv(&m, DEFAULT_RTOL);
        let tol = 1e-10;
        assert!(m.matmul(&p).matmul(&m).sub(&m).max_abs() <= tol);
        assert!(p.matmul(&m).matmul(&p).sub(&p).max_abs() <= tol);
        let mp = m.matmul(&p);
        assert!(mp.sub(&mp.transpose()).max_abs() <= tol);
        let pm = p.matmul(&m);
        assert!(pm.sub(&pm.transpose()).max_abs() <= tol);
    }

    #[test]
    fn cholesky_roundtrip_and_failure() {
        let g = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let l = cholesky(&g).unwrap();
        assert!(l.matmul(&l.transpose()).sub(&g).max_abs() < 1e-15);
        let bad = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert_eq!(cholesky(&bad), Err(DenseError::NotPositiveDefinite(1)));
    }

    #[test]
    fn symmetric_eigen_reconstructs() {
        let b = random(6, 6, 11);
        let s = b.add(&b.transpose());
        let e = symmetric_eigen(&s);
        let rebuilt = e
            .vectors
            .matmul(&DenseMatrix::diagonal(&e.values))
            .matmul(&e.vectors.transpose());
        assert!(rebuilt.sub(&s).max_abs() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
