//! Bochner matrices: rectangular arrays of Hilbert-space entries.
//!
//! Row and column positions are 1-based in the public API. Storage is a
//! single row-major buffer of coefficient vectors, so row `i` is one
//! contiguous slice of `n * dim` values.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::densela::{axpy, dot, psd_rank, symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};
use crate::hilbert::{check_spec, gram_of_chunks, HElement, InnerProductSpec};

/// Strictly increasing set of 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts and deduplicates `indices`; every index must lie in `1..=bound`.
    pub fn new(mut indices: Vec<usize>, bound: usize) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > bound) {
            return Err(Error::OutOfBounds { index: bad, bound });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self(indices))
    }

    pub fn full(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Inserts `i`, returning whether it was new.
    pub fn insert(&mut self, i: usize) -> bool {
        match self.0.binary_search(&i) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, i);
                true
            }
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `M · A`
    Left,
    /// `A · M`
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpNorm {
    One,
    Two,
    Inf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BochnerMatrix {
    m: usize,
    n: usize,
    spec: Arc<InnerProductSpec>,
    data: Vec<f64>,
}

impl BochnerMatrix {
    pub fn zeros(m: usize, n: usize, spec: Arc<InnerProductSpec>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyShape);
        }
        Ok(Self {
            m,
            n,
            data: vec![0.0; m * n * spec.dim()],
            spec,
        })
    }

    /// Builds from row-major coefficients: entry `(i, j)` (0-based) occupies
    /// `data[(i*n + j)*dim ..][..dim]`.
    pub fn from_flat(m: usize, n: usize, spec: Arc<InnerProductSpec>, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::EmptyShape);
        }
        let expected = m * n * spec.dim();
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m, n, spec, data })
    }

    /// Builds from a grid of entries, given row by row.
    pub fn from_entries(spec: Arc<InnerProductSpec>, rows: &[Vec<HElement>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut a = Self::zeros(m, n, spec)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch {
                    op: "from_entries",
                    left: (m, n),
                    right: (i + 1, row.len()),
                });
            }
            for (j, e) in row.iter().enumerate() {
                check_spec(&a.spec, e.spec())?;
                a.entry0_mut(i, j).copy_from_slice(e.coeffs());
            }
        }
        Ok(a)
    }

    /// Entries given by a coefficient closure over 1-based positions.
    pub fn from_fn(
        m: usize,
        n: usize,
        spec: Arc<InnerProductSpec>,
        mut f: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let dim = spec.dim();
        let mut data = Vec::with_capacity(m * n * dim);
        for i in 1..=m {
            for j in 1..=n {
                let c = f(i, j);
                if c.len() != dim {
                    return Err(Error::LengthMismatch {
                        expected: dim,
                        found: c.len(),
                    });
                }
                data.extend_from_slice(&c);
            }
        }
        Self::from_flat(m, n, spec, data)
    }

    /// `h · M` for a dense scalar matrix `M`.
    pub fn outer(h: &HElement, mat: &DenseMatrix) -> Result<Self> {
        Self::from_fn(mat.rows(), mat.cols(), h.spec().clone(), |i, j| {
            h.coeffs().iter().map(|c| c * mat[(i - 1, j - 1)]).collect()
        })
    }

    /// Matrix with i.i.d. standard normal coefficients.
    pub fn random(m: usize, n: usize, spec: Arc<InnerProductSpec>, rng: &mut impl Rng) -> Result<Self> {
        let len = m * n * spec.dim();
        let data = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self::from_flat(m, n, spec, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn spec(&self) -> &Arc<InnerProductSpec> {
        &self.spec
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.m {
            return Err(Error::OutOfBounds { index: i, bound: self.m });
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::OutOfBounds { index: j, bound: self.n });
        }
        Ok(())
    }

    /// Entry `(i, j)`, 1-based.
    pub fn entry(&self, i: usize, j: usize) -> Result<HElement> {
        self.check_row(i)?;
        self.check_col(j)?;
        Ok(HElement::new(self.spec.clone(), self.entry0(i - 1, j - 1).to_vec())
            .expect("stored entries are valid"))
    }

    /// Coefficients of entry `(i, j)`, 1-based.
    pub fn entry_coeffs(&self, i: usize, j: usize) -> Result<&[f64]> {
        self.check_row(i)?;
        self.check_col(j)?;
        Ok(self.entry0(i - 1, j - 1))
    }

    pub fn set_entry(&mut self, i: usize, j: usize, h: &HElement) -> Result<()> {
        self.check_row(i)?;
        self.check_col(j)?;
        check_spec(&self.spec, h.spec())?;
        self.entry0_mut(i - 1, j - 1).copy_from_slice(h.coeffs());
        Ok(())
    }

    /// Row `i` (1-based) as one contiguous slice of `n * dim` coefficients.
    pub fn row_coeffs(&self, i: usize) -> Result<&[f64]> {
        self.check_row(i)?;
        Ok(self.row0(i - 1))
    }

    /// Column `j` (1-based) as `m * dim` concatenated coefficients.
    pub fn col_coeffs(&self, j: usize) -> Result<Vec<f64>> {
        self.check_col(j)?;
        Ok(self.col0(j - 1))
    }

    #[inline]
    pub(crate) fn entry0(&self, i: usize, j: usize) -> &[f64] {
        let d = self.spec.dim();
        let start = (i * self.n + j) * d;
        &self.data[start..start + d]
    }

    #[inline]
    pub(crate) fn entry0_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let d = self.spec.dim();
        let start = (i * self.n + j) * d;
        &mut self.data[start..start + d]
    }

    #[inline]
    pub(crate) fn row0(&self, i: usize) -> &[f64] {
        let w = self.n * self.spec.dim();
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    pub(crate) fn row0_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.n * self.spec.dim();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub(crate) fn col0(&self, j: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m * self.dim());
        for i in 0..self.m {
            out.extend_from_slice(self.entry0(i, j));
        }
        out
    }

    /// Column-major copy in whitened coordinates: one `m * dim` vector per
    /// column, with plain dot products equal to `l2(H)` inner products.
    pub(crate) fn whitened_columns(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|j| {
                let mut c = self.col0(j);
                self.spec.whiten(&mut c);
                c
            })
            .collect()
    }

    /// Assembles a matrix from whitened column vectors.
    pub(crate) fn from_whitened_columns(
        m: usize,
        spec: Arc<InnerProductSpec>,
        cols: &[Vec<f64>],
    ) -> Result<Self> {
        let n = cols.len();
        let dim = spec.dim();
        let mut a = Self::zeros(m, n, spec)?;
        for (j, c) in cols.iter().enumerate() {
            let mut c = c.clone();
            a.spec.unwhiten(&mut c);
            for i in 0..m {
                a.entry0_mut(i, j).copy_from_slice(&c[i * dim..(i + 1) * dim]);
            }
        }
        Ok(a)
    }

    pub fn transpose(&self) -> Self {
        let d = self.dim();
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.n {
            for i in 0..self.m {
                data.extend_from_slice(self.entry0(i, j));
            }
        }
        debug_assert_eq!(data.len(), self.m * self.n * d);
        Self {
            m: self.n,
            n: self.m,
            spec: self.spec.clone(),
            data,
        }
    }

    /// Sub-matrix at 1-based index sets.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<Self> {
        if let Some(&i) = rows.as_slice().last() {
            self.check_row(i)?;
        }
        if let Some(&j) = cols.as_slice().last() {
            self.check_col(j)?;
        }
        let mut data = Vec::with_capacity(rows.len() * cols.len() * self.dim());
        for i in rows.iter() {
            for j in cols.iter() {
                data.extend_from_slice(self.entry0(i - 1, j - 1));
            }
        }
        Self::from_flat(rows.len(), cols.len(), self.spec.clone(), data)
    }

    pub fn select_columns(&self, cols: &IndexSet) -> Result<Self> {
        self.submatrix(&IndexSet::full(self.m), cols)
    }

    pub fn select_rows(&self, rows: &IndexSet) -> Result<Self> {
        self.submatrix(rows, &IndexSet::full(self.n))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| alpha * v).collect(),
            ..self.clone()
        }
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_same_shape(other, "combine")?;
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        check_spec(&self.spec, &other.spec)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// `M · A` for `Side::Left`, `A · M` for `Side::Right`.
    pub fn mode_multiply(&self, side: Side, mat: &DenseMatrix) -> Result<Self> {
        match side {
            Side::Left => self.left_multiply(mat),
            Side::Right => self.right_multiply(mat),
        }
    }

    /// `M · A`
    pub fn left_multiply(&self, mat: &DenseMatrix) -> Result<Self> {
        if mat.cols() != self.m {
            return Err(Error::ShapeMismatch {
                op: "left multiply",
                left: mat.shape(),
                right: self.shape(),
            });
        }
        let mut out = Self::zeros(mat.rows(), self.n, self.spec.clone())?;
        for r in 0..mat.rows() {
            let out_row = out.row0_mut(r);
            for s in 0..self.m {
                let c = mat[(r, s)];
                if c != 0.0 {
                    axpy(c, self.row0(s), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `A · M`
    pub fn right_multiply(&self, mat: &DenseMatrix) -> Result<Self> {
        if mat.rows() != self.n {
            return Err(Error::ShapeMismatch {
                op: "right multiply",
                left: self.shape(),
                right: mat.shape(),
            });
        }
        let k = mat.cols();
        let mut out = Self::zeros(self.m, k, self.spec.clone())?;
        for i in 0..self.m {
            for t in 0..self.n {
                let src = self.entry0(i, t).to_vec();
                for c in 0..k {
                    let w = mat[(t, c)];
                    if w != 0.0 {
                        axpy(w, &src, out.entry0_mut(i, c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `A · x` for a scalar vector `x`, as an `m x 1` Bochner matrix.
    pub fn apply(&self, x: &[f64]) -> Result<Self> {
        self.right_multiply(&DenseMatrix::from_row_major(x.len(), 1, x.to_vec()))
    }

    /// Entry norms as an `m x n` scalar matrix.
    pub fn entry_norms(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.m, self.n, |i, j| self.spec.norm_coeffs(self.entry0(i, j)))
    }

    pub fn lp_norm(&self, p: LpNorm) -> f64 {
        let norms = self.entry_norms();
        let vals = norms.as_slice();
        match p {
            LpNorm::One => vals.iter().sum(),
            LpNorm::Two => self.norm_l2(),
            LpNorm::Inf => vals.iter().fold(0.0_f64, |m, v| m.max(*v)),
        }
    }

    /// `l2(H)` norm.
    pub fn norm_l2(&self) -> f64 {
        self.spec.inner_blocks(&self.data, &self.data).max(0.0).sqrt()
    }

    /// Largest entry norm.
    pub fn norm_max(&self) -> f64 {
        self.lp_norm(LpNorm::Inf)
    }

    /// 1-based position of the entry with the largest norm (first on ties).
    pub fn argmax_entry(&self) -> (usize, usize) {
        let norms = self.entry_norms();
        let mut best = (0, 0);
        let mut best_v = -1.0;
        for i in 0..self.m {
            for j in 0..self.n {
                if norms[(i, j)] > best_v {
                    best_v = norms[(i, j)];
                    best = (i, j);
                }
            }
        }
        (best.0 + 1, best.1 + 1)
    }
}

/// `l2(H)` inner product of two equally shaped matrices.
pub fn l2_inner(a: &BochnerMatrix, b: &BochnerMatrix) -> Result<f64> {
    a.check_same_shape(b, "l2_inner")?;
    Ok(a.spec.inner_blocks(&a.data, &b.data))
}

/// The scalar matrix `A*B` with entry `(i, j) = sum_k <B(k,j), A(k,i)>`.
pub fn adjoint_product(a: &BochnerMatrix, b: &BochnerMatrix) -> Result<DenseMatrix> {
    check_spec(&a.spec, &b.spec)?;
    if a.m != b.m {
        return Err(Error::ShapeMismatch {
            op: "adjoint_product",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let wa = a.whitened_columns();
    let wb = if std::ptr::eq(a, b) { wa.clone() } else { b.whitened_columns() };
    Ok(DenseMatrix::from_fn(a.n, b.n, |i, j| dot(&wa[i], &wb[j])))
}

/// Heuristic lower bound on the spectral norm `max ‖Σ a_ij x_i y_j‖` over
/// unit `x`, `y`, by alternating top-eigenvector updates.
///
/// The first restart starts at the largest entry, so the result is never
/// below the `l∞(H)` norm; the rest start from seeded random directions.
pub fn spectral_norm_lb(a: &BochnerMatrix, restarts: usize, iters: usize) -> f64 {
    let (m, n) = a.shape();
    let dim = a.dim();
    let mut w = a.data.clone();
    a.spec.whiten(&mut w);
    let at = |i: usize, j: usize| &w[(i * n + j) * dim..(i * n + j + 1) * dim];

    // Gram of the combinations sum_j a_ij y_j over rows i (or the transpose).
    let contract_cols = |y: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m * dim];
        for i in 0..m {
            for j in 0..n {
                if y[j] != 0.0 {
                    axpy(y[j], at(i, j), &mut out[i * dim..(i + 1) * dim]);
                }
            }
        }
        out
    };
    let contract_rows = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n * dim];
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                axpy(x[i], at(i, j), &mut out[j * dim..(j + 1) * dim]);
            }
        }
        out
    };
    let top = |z: &[f64]| -> (f64, Vec<f64>) {
        let g = gram_of_chunks(z, dim);
        let e = symmetric_eigen(&g);
        (e.values[0].max(0.0), e.vectors.column(0))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (_, j_star) = a.argmax_entry();
    let mut best = 0.0_f64;
    for restart in 0..restarts.max(1) {
        let mut y: Vec<f64> = if restart == 0 {
            let mut e = vec![0.0; n];
            e[j_star - 1] = 1.0;
            e
        } else {
            let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let nv = dot(&v, &v).sqrt();
            v.into_iter().map(|t| t / nv).collect()
        };
        let mut value = 0.0_f64;
        for _ in 0..iters.max(1) {
            let (_, x) = top(&contract_cols(&y));
            let (lam, y_new) = top(&contract_rows(&x));
            y = y_new;
            let new_value = lam.sqrt();
            let gain = new_value - value;
            value = value.max(new_value);
            if gain <= 1e-10 * value {
                break;
            }
        }
        best = best.max(value);
    }
    best
}

/// Numerical dimension of the span of all entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StockDimension {
    pub value: usize,
    /// Set when the entries were randomly compressed first, making `value`
    /// a lower bound rather than the exact numerical rank.
    pub lower_bound: bool,
}

const STOCK_COMPRESSION: usize = 512;

/// Numerical rank of the Gram matrix of all `m * n` entries.
///
/// The nonzero spectrum of the `mn x mn` entry Gram matrix equals that of
/// the `dim x dim` coefficient Gram matrix, so the smaller of the two is
/// formed. If both exceed 512, the entries are first compressed into 512
/// random mixtures.
pub fn stock_dimension(a: &BochnerMatrix, rtol: f64) -> StockDimension {
    let dim = a.dim();
    let count = a.m * a.n;
    let mut z = a.data.clone();
    a.spec.whiten(&mut z);
    if count <= dim && count <= STOCK_COMPRESSION {
        let g = gram_of_chunks(&z, dim);
        return StockDimension {
            value: psd_rank(&g, rtol),
            lower_bound: false,
        };
    }
    if dim <= STOCK_COMPRESSION {
        let mut g = DenseMatrix::zeros(dim, dim);
        for e in z.chunks_exact(dim) {
            for p in 0..dim {
                if e[p] == 0.0 {
                    continue;
                }
                axpy(e[p], e, g.row_mut(p));
            }
        }
        return StockDimension {
            value: psd_rank(&g, rtol),
            lower_bound: false,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x570c);
    let mut mixed = vec![0.0; STOCK_COMPRESSION * dim];
    for chunk in mixed.chunks_exact_mut(dim) {
        for e in z.chunks_exact(dim) {
            let c: f64 = rng.sample(StandardNormal);
            axpy(c, e, chunk);
        }
    }
    let g = gram_of_chunks(&mixed, dim);
    StockDimension {
        value: psd_rank(&g, rtol),
        lower_bound: true,
    }
}
