//! QR, pivoted QR, SVD, pseudoinverse, least squares, HOSVD and LU for
//! Bochner matrices.
//!
//! Column computations run on whitened copies of the columns, where the
//! `l2(H)` inner product is a plain dot product; Bochner factors are mapped
//! back to the original coordinates before they are returned.

use std::sync::Arc;

use crate::densela::{axpy, dot, norm2, svd_with_tol, DenseError, DenseMatrix};
use crate::error::{Error, Result};
use crate::hilbert::{check_spec, InnerProductSpec};
use crate::matrix::{adjoint_product, BochnerMatrix};

/// Default relative tolerance for rank decisions on Bochner matrices.
pub const BOCHNER_RTOL: f64 = 1e-10;

/// `A·Π = Q·R` with orthonormal `Q`.
#[derive(Debug, Clone)]
pub struct BochnerQr {
    pub q: BochnerMatrix,
    /// `r x n`, columns in pivoted order.
    pub r: DenseMatrix,
    /// 1-based: position `k` of `A·Π` holds original column `perm[k]`.
    pub perm: Vec<usize>,
}

impl BochnerQr {
    pub fn rank(&self) -> usize {
        self.q.cols()
    }

    /// The permutation as a dense `n x n` matrix `Π`.
    pub fn perm_matrix(&self) -> DenseMatrix {
        let n = self.perm.len();
        let mut p = DenseMatrix::zeros(n, n);
        for (k, &j) in self.perm.iter().enumerate() {
            p[(j - 1, k)] = 1.0;
        }
        p
    }
}

fn split_whitened(a: &BochnerMatrix) -> (usize, Arc<InnerProductSpec>, Vec<Vec<f64>>) {
    (a.rows(), a.spec().clone(), a.whitened_columns())
}

/// Gram-Schmidt QR of a matrix with numerically independent columns.
pub fn bochner_qr(a: &BochnerMatrix) -> Result<BochnerQr> {
    bochner_qr_with_tol(a, BOCHNER_RTOL)
}

/// Modified Gram-Schmidt with one reorthogonalisation pass in `(H^m, l2(H))`.
pub fn bochner_qr_with_tol(a: &BochnerMatrix, rtol: f64) -> Result<BochnerQr> {
    let (m, spec, cols) = split_whitened(a);
    let n = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut r = DenseMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        let original = norm2(&col);
        let mut v = col;
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[(i, j)] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let residual = norm2(&v);
        if residual <= rtol * original || residual == 0.0 {
            return Err(Error::RankDeficient {
                column: j + 1,
                residual,
                original,
            });
        }
        r[(j, j)] = residual;
        v.iter_mut().for_each(|x| *x /= residual);
        q.push(v);
    }
    Ok(BochnerQr {
        q: BochnerMatrix::from_whitened_columns(m, spec, &q)?,
        r,
        perm: (1..=n).collect(),
    })
}

/// Greedy column-pivoted QR; stops once every residual column norm is at
/// most `rtol` times the largest original column norm.
pub fn pivoted_qr(a: &BochnerMatrix, rtol: f64) -> Result<BochnerQr> {
    let (m, spec, mut res) = split_whitened(a);
    let n = res.len();
    let max_original = res.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    if max_original == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut q: Vec<Vec<f64>> = Vec::new();
    // rows of R, indexed by position in the pivoted order
    let mut r_rows: Vec<Vec<f64>> = Vec::new();
    let threshold = rtol * max_original;

    for k in 0..n {
        let (p, best) = (k..n)
            .map(|t| (t, norm2(&res[t])))
            .fold((k, -1.0), |acc, (t, v)| if v > acc.1 { (t, v) } else { acc });
        if best <= threshold || best == 0.0 {
            break;
        }
        res.swap(k, p);
        perm.swap(k, p);
        for row in r_rows.iter_mut() {
            row.swap(k, p);
        }
        let mut v = std::mem::take(&mut res[k]);
        for (i, qi) in q.iter().enumerate() {
            let c = dot(qi, &v);
            r_rows[i][k] += c;
            axpy(-c, qi, &mut v);
        }
        let nv = norm2(&v);
        if nv <= threshold || nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut row = vec![0.0; n];
        row[k] = nv;
        for t in (k + 1)..n {
            let c = dot(&v, &res[t]);
            row[t] = c;
            axpy(-c, &v, &mut res[t]);
        }
        r_rows.push(row);
        q.push(v);
    }

    let rank = q.len();
    let r = DenseMatrix::from_fn(rank, n, |i, j| r_rows[i][j]);
    Ok(BochnerQr {
        q: BochnerMatrix::from_whitened_columns(m, spec, &q)?,
        r,
        perm: perm.into_iter().map(|j| j + 1).collect(),
    })
}

/// Compact SVD `A = U diag(sigma) Vᵀ` with Bochner `U` and scalar `V`.
#[derive(Debug, Clone)]
pub struct BochnerSvd {
    pub u: BochnerMatrix,
    pub sigma: Vec<f64>,
    /// `n x r`
    pub v: DenseMatrix,
}

impl BochnerSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Result<BochnerMatrix> {
        let sv = DenseMatrix::from_fn(self.rank(), self.v.rows(), |i, j| self.sigma[i] * self.v[(j, i)]);
        self.u.right_multiply(&sv)
    }

    /// `sqrt(sum_{i > kappa} sigma_i^2)`
    pub fn tail_norm(&self, kappa: usize) -> f64 {
        self.sigma
            .iter()
            .skip(kappa)
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt()
    }

    /// The leading `k` right singular vectors, `n x k`.
    pub fn leading_v(&self, k: usize) -> DenseMatrix {
        self.v.leading_columns(k)
    }
}

/// SVD through pivoted QR followed by a dense SVD of the triangular factor.
pub fn bochner_svd(a: &BochnerMatrix, rtol: f64) -> Result<BochnerSvd> {
    let qr = pivoted_qr(a, rtol)?;
    let n = a.cols();
    // undo the pivoting: column perm[k] of R Πᵀ is column k of R
    let mut rpt = DenseMatrix::zeros(qr.rank(), n);
    for (k, &j) in qr.perm.iter().enumerate() {
        for i in 0..qr.rank() {
            rpt[(i, j - 1)] = qr.r[(i, k)];
        }
    }
    let dense = match svd_with_tol(&rpt, rtol) {
        Ok(s) => s,
        Err(DenseError::ZeroMatrix) => return Err(Error::ZeroMatrix),
        Err(e) => return Err(e.into()),
    };
    let u = qr.q.right_multiply(&dense.u)?;
    Ok(BochnerSvd {
        u,
        sigma: dense.sigma,
        v: dense.v,
    })
}

/// Column-side factorisation `left · right` with Bochner `left` (`m x k`)
/// and scalar `right` (`k x n`).
#[derive(Debug, Clone)]
pub struct ColumnSideForm {
    pub left: BochnerMatrix,
    pub right: DenseMatrix,
}

impl ColumnSideForm {
    pub fn densify(&self) -> Result<BochnerMatrix> {
        self.left.right_multiply(&self.right)
    }
}

/// The best rank-`kappa` approximation `U_κ Σ_κ V_κᵀ`.
pub fn truncated_svd(s: &BochnerSvd, kappa: usize) -> Result<ColumnSideForm> {
    if kappa == 0 || kappa > s.rank() {
        return Err(Error::BadRank {
            requested: kappa,
            available: s.rank(),
        });
    }
    let scale = DenseMatrix::from_fn(s.rank(), kappa, |i, j| if i == j { s.sigma[j] } else { 0.0 });
    Ok(ColumnSideForm {
        left: s.u.right_multiply(&scale)?,
        right: s.v.leading_columns(kappa).transpose(),
    })
}

/// `A† y = V Σ⁻¹ U* y` applied to each column of `y` (`m x k`); result `n x k`.
pub fn pinv_apply(s: &BochnerSvd, y: &BochnerMatrix) -> Result<DenseMatrix> {
    check_spec(s.u.spec(), y.spec())?;
    if y.rows() != s.u.rows() {
        return Err(Error::ShapeMismatch {
            op: "pinv_apply",
            left: s.u.shape(),
            right: y.shape(),
        });
    }
    let mut uy = adjoint_product(&s.u, y)?;
    for (i, sigma) in s.sigma.iter().enumerate() {
        uy.row_mut(i).iter_mut().for_each(|x| *x /= sigma);
    }
    Ok(s.v.matmul(&uy))
}

/// Pseudoinverse of a Bochner matrix as an operator `H^m -> R^n`; the zero
/// matrix has the zero pseudoinverse.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    rows: usize,
    cols: usize,
    spec: Arc<InnerProductSpec>,
    svd: Option<BochnerSvd>,
}

impl Pseudoinverse {
    pub fn new(a: &BochnerMatrix, rtol: f64) -> Result<Self> {
        let svd = match bochner_svd(a, rtol) {
            Ok(s) => Some(s),
            Err(Error::ZeroMatrix) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            rows: a.rows(),
            cols: a.cols(),
            spec: a.spec().clone(),
            svd,
        })
    }

    pub fn svd(&self) -> Option<&BochnerSvd> {
        self.svd.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.svd.as_ref().map_or(0, BochnerSvd::rank)
    }

    pub fn apply(&self, y: &BochnerMatrix) -> Result<DenseMatrix> {
        match &self.svd {
            Some(s) => pinv_apply(s, y),
            None => {
                check_spec(&self.spec, y.spec())?;
                if y.rows() != self.rows {
                    return Err(Error::ShapeMismatch {
                        op: "pinv_apply",
                        left: (self.rows, self.cols),
                        right: y.shape(),
                    });
                }
                Ok(DenseMatrix::zeros(self.cols, y.cols()))
            }
        }
    }
}

/// `X = A† B`, the minimiser of `‖A X − B‖` in `l2(H)`.
pub fn least_squares(a: &BochnerMatrix, b: &BochnerMatrix, rtol: f64) -> Result<DenseMatrix> {
    Pseudoinverse::new(a, rtol)?.apply(b)
}

/// `X · core · Y` with scalar outer factors.
#[derive(Debug, Clone)]
pub struct TuckerForm {
    /// `m x ρ`
    pub x: DenseMatrix,
    /// `ρ x κ`
    pub core: BochnerMatrix,
    /// `κ x n`
    pub y: DenseMatrix,
}

impl TuckerForm {
    pub fn shape(&self) -> (usize, usize) {
        (self.x.rows(), self.y.cols())
    }

    /// `(ρ, κ)`
    pub fn ranks(&self) -> (usize, usize) {
        self.core.shape()
    }

    pub fn densify(&self) -> Result<BochnerMatrix> {
        self.core.right_multiply(&self.y)?.left_multiply(&self.x)
    }

    /// Row `i` (0-based) of the densified form, given `core · Y`.
    pub(crate) fn row_from(&self, core_y: &BochnerMatrix, i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..self.x.cols() {
            let c = self.x[(i, s)];
            if c != 0.0 {
                axpy(c, core_y.row0(s), out);
            }
        }
    }

    /// `‖A − X·core·Y‖` in `l2(H)`, accumulated row by row.
    pub fn residual_norm(&self, a: &BochnerMatrix) -> Result<f64> {
        check_spec(a.spec(), self.core.spec())?;
        if a.shape() != self.shape() {
            return Err(Error::ShapeMismatch {
                op: "residual_norm",
                left: a.shape(),
                right: self.shape(),
            });
        }
        let core_y = self.core.right_multiply(&self.y)?;
        let mut buf = vec![0.0; a.cols() * a.dim()];
        let mut total = 0.0;
        for i in 0..a.rows() {
            self.row_from(&core_y, i, &mut buf);
            for (b, x) in buf.iter_mut().zip(a.row0(i)) {
                *b = x - *b;
            }
            total += a.spec().inner_blocks(&buf, &buf);
        }
        Ok(total.max(0.0).sqrt())
    }
}

/// SVDs of `A` and `Aᵀ`, from which HOSVD approximants of any admissible
/// rank pair are cut.
#[derive(Debug, Clone)]
pub struct HosvdBasis {
    a: BochnerMatrix,
    /// SVD of `A`: right factor spans the dominant column-side subspace.
    pub col_svd: BochnerSvd,
    /// SVD of `Aᵀ`: right factor spans the dominant row-side subspace.
    pub row_svd: BochnerSvd,
}

impl HosvdBasis {
    pub fn new(a: &BochnerMatrix, rtol: f64) -> Result<Self> {
        Ok(Self {
            a: a.clone(),
            col_svd: bochner_svd(a, rtol)?,
            row_svd: bochner_svd(&a.transpose(), rtol)?,
        })
    }

    pub fn column_rank(&self) -> usize {
        self.col_svd.rank()
    }

    pub fn row_rank(&self) -> usize {
        self.row_svd.rank()
    }

    fn check(&self, rho: usize, kappa: usize) -> Result<()> {
        if rho == 0 || rho > self.row_rank() {
            return Err(Error::BadRank {
                requested: rho,
                available: self.row_rank(),
            });
        }
        if kappa == 0 || kappa > self.column_rank() {
            return Err(Error::BadRank {
                requested: kappa,
                available: self.column_rank(),
            });
        }
        Ok(())
    }

    pub fn truncate(&self, rho: usize, kappa: usize) -> Result<TuckerForm> {
        self.check(rho, kappa)?;
        let q = self.row_svd.leading_v(rho);
        let v = self.col_svd.leading_v(kappa);
        let core = self.a.right_multiply(&v)?.left_multiply(&q.transpose())?;
        Ok(TuckerForm {
            x: q,
            core,
            y: v.transpose(),
        })
    }

    /// `sqrt(‖Σ_κᶜ‖² + ‖Λ_ρᶜ‖²)`
    pub fn error_bound(&self, rho: usize, kappa: usize) -> f64 {
        let c = self.col_svd.tail_norm(kappa);
        let r = self.row_svd.tail_norm(rho);
        (c * c + r * r).sqrt()
    }
}

/// Tucker approximant of rank at most `(rho, kappa)` by two-sided projection.
pub fn hosvd(a: &BochnerMatrix, rho: usize, kappa: usize, rtol: f64) -> Result<TuckerForm> {
    HosvdBasis::new(a, rtol)?.truncate(rho, kappa)
}

/// `A = L·U` with unit lower triangular scalar `L`.
#[derive(Debug, Clone)]
pub struct BochnerLu {
    pub l: DenseMatrix,
    pub u: BochnerMatrix,
}

pub fn bochner_lu(a: &BochnerMatrix) -> Result<BochnerLu> {
    bochner_lu_with_tol(a, BOCHNER_RTOL)
}

/// Elimination with multipliers `<e_ik, e_kk> / ‖e_kk‖²`, applied to whole
/// rows. After step `k` the entries below the pivot are orthogonal to it.
pub fn bochner_lu_with_tol(a: &BochnerMatrix, rtol: f64) -> Result<BochnerLu> {
    let (m, n) = a.shape();
    if m != n {
        return Err(Error::ShapeMismatch {
            op: "bochner_lu",
            left: (m, n),
            right: (n, m),
        });
    }
    let spec = a.spec().clone();
    let threshold = rtol * a.norm_max();
    let mut e = a.clone();
    let mut l = DenseMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let pivot = e.entry0(k, k).to_vec();
        let pivot_sq = spec.inner_coeffs(&pivot, &pivot);
        if pivot_sq.sqrt() <= threshold || pivot_sq == 0.0 {
            return Err(Error::PivotBreakdown { step: k + 1 });
        }
        let row_k = e.row0(k).to_vec();
        for i in (k + 1)..n {
            let alpha = spec.inner_coeffs(e.entry0(i, k), &pivot) / pivot_sq;
            if alpha != 0.0 {
                axpy(-alpha, &row_k, e.row0_mut(i));
            }
            l[(i, k)] = alpha;
        }
    }
    Ok(BochnerLu { l, u: e })
}

/// Numerical column rank; zero for the zero matrix.
pub fn column_rank(a: &BochnerMatrix, rtol: f64) -> usize {
    match pivoted_qr(a, rtol) {
        Ok(qr) => qr.rank(),
        Err(_) => 0,
    }
}

pub fn row_rank(a: &BochnerMatrix, rtol: f64) -> usize {
    column_rank(&a.transpose(), rtol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::HElement;
    use crate::matrix::{l2_inner, LpNorm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orthonormal(m: usize, n: usize) -> BochnerMatrix {
        let s = InnerProductSpec::euclidean(m * n);
        BochnerMatrix::from_fn(m, n, s, |i, j| {
            let mut c = vec![0.0; m * n];
            c[(i - 1) * n + (j - 1)] = 1.0;
            c
        })
        .unwrap()
    }

    #[test]
    fn qr_single_column() {
        let s = InnerProductSpec::euclidean(2);
        let a = BochnerMatrix::from_fn(2, 1, s, |i, _| vec![i as f64, 1.0]).unwrap();
        let f = bochner_qr(&a).unwrap();
        let norm = a.norm_l2();
        assert!((f.r[(0, 0)] - norm).abs() < 1e-14);
        assert!(f.q.sub(&a.scaled(1.0 / norm)).unwrap().norm_l2() < 1e-14);
    }

    #[test]
    fn qr_of_orthonormal_is_identity() {
        let a = orthonormal(2, 3).scaled(1.0 / 2f64.sqrt());
        let f = bochner_qr(&a).unwrap();
        assert!(f.r.sub(&DenseMatrix::identity(3)).max_abs() < 1e-15);
        assert!(f.q.sub(&a).unwrap().norm_l2() < 1e-15);
    }

    #[test]
    fn pivoted_qr_duplicate_columns() {
        let s = InnerProductSpec::euclidean(3);
        let a = BochnerMatrix::from_fn(2, 2, s, |i, _| vec![i as f64, 2.0, -1.0]).unwrap();
        let f = pivoted_qr(&a, BOCHNER_RTOL).unwrap();
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn svd_rank_one() {
        let s = InnerProductSpec::euclidean(3);
        let h = HElement::new(s, vec![0.0, 0.6, 0.8]).unwrap();
        let xy = DenseMatrix::from_rows(&[[0.6 * 0.28, 0.6 * 0.96], [0.8 * 0.28, 0.8 * 0.96]]);
        let a = BochnerMatrix::outer(&h, &xy).unwrap();
        let svd = bochner_svd(&a, BOCHNER_RTOL).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.sigma[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_entries_singular_values() {
        let a = orthonormal(2, 2);
        let svd = bochner_svd(&a, BOCHNER_RTOL).unwrap();
        assert_eq!(svd.rank(), 2);
        for s in &svd.sigma {
            assert!((s - 2f64.sqrt()).abs() < 1e-14);
        }
        assert_eq!(column_rank(&a, BOCHNER_RTOL), 2);
        assert_eq!(row_rank(&a, BOCHNER_RTOL), 2);
    }

    #[test]
    fn zero_matrix_handling() {
        let z = BochnerMatrix::zeros(3, 2, InnerProductSpec::euclidean(2)).unwrap();
        assert_eq!(column_rank(&z, BOCHNER_RTOL), 0);
        assert!(matches!(bochner_svd(&z, BOCHNER_RTOL), Err(Error::ZeroMatrix)));
        let y = BochnerMatrix::zeros(3, 4, z.spec().clone()).unwrap();
        assert_eq!(least_squares(&z, &y, BOCHNER_RTOL).unwrap(), DenseMatrix::zeros(2, 4));
    }

    #[test]
    fn truncated_svd_bad_rank() {
        let a = orthonormal(2, 2);
        let svd = bochner_svd(&a, BOCHNER_RTOL).unwrap();
        assert!(matches!(truncated_svd(&svd, 0), Err(Error::BadRank { .. })));
        assert!(matches!(truncated_svd(&svd, 3), Err(Error::BadRank { .. })));
        let full = truncated_svd(&svd, 2).unwrap().densify().unwrap();
        assert!(full.sub(&a).unwrap().norm_l2() < 1e-14);
    }

    #[test]
    fn lu_single_entry_and_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = InnerProductSpec::euclidean(5);
        let one = BochnerMatrix::random(1, 1, s.clone(), &mut rng).unwrap();
        let f = bochner_lu(&one).unwrap();
        assert_eq!(f.l, DenseMatrix::identity(1));
        assert_eq!(f.u, one);

        let a = BochnerMatrix::random(4, 4, s.clone(), &mut rng).unwrap();
        let f = bochner_lu(&a).unwrap();
        assert!(f.u.left_multiply(&f.l).unwrap().sub(&a).unwrap().norm_l2() <= 1e-12 * a.norm_l2());
        for i in 1..=4 {
            let uii = f.u.entry(i, i).unwrap();
            for j in (i + 1)..=4 {
                let uji = f.u.entry(j, i).unwrap();
                let ip = crate::hilbert::inner(&uii, &uji).unwrap();
                assert!(ip.abs() <= 1e-8 * uii.norm() * uji.norm());
            }
        }
    }

    #[test]
    fn lu_breakdown_reports_step() {
        let z = BochnerMatrix::zeros(2, 2, InnerProductSpec::euclidean(1)).unwrap();
        assert!(matches!(bochner_lu(&z), Err(Error::PivotBreakdown { step: 1 })));
    }

    #[test]
    fn hosvd_full_rank_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = BochnerMatrix::random(4, 3, InnerProductSpec::euclidean(3), &mut rng).unwrap();
        let basis = HosvdBasis::new(&a, BOCHNER_RTOL).unwrap();
        let t = basis.truncate(basis.row_rank(), basis.column_rank()).unwrap();
        assert!(t.residual_norm(&a).unwrap() <= 1e-12 * a.norm_l2());
        assert!(matches!(basis.truncate(0, 1), Err(Error::BadRank { .. })));
        let sum_sq: f64 = basis.col_svd.sigma.iter().map(|s| s * s).sum();
        assert!((sum_sq - l2_inner(&a, &a).unwrap()).abs() <= 1e-12 * sum_sq);
        assert!((a.lp_norm(LpNorm::Two).powi(2) - sum_sq).abs() <= 1e-12 * sum_sq);
    }
}
