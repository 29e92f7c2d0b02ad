//! Cross components, rook pivoting, ABCD and ABCDX.
//!
//! All algorithms read matrices through [`BochnerView`], which serves rows,
//! columns and entries on demand. Dense matrices, oracle-backed accessors
//! and lazily evaluated residuals all implement it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomp::{bochner_svd, pinv_apply, TuckerForm};
use crate::densela::axpy;
use crate::error::{Error, Result};
use crate::hilbert::{check_spec, HElement, InnerProductSpec};
use crate::matrix::{BochnerMatrix, IndexSet};

/// Pivots whose norm is at most this fraction of the largest entry norm
/// seen so far are treated as zero.
pub const ZERO_PIVOT_RTOL: f64 = 1e-14;

/// Read access to a Bochner matrix. Indices are 1-based; rows come back as
/// `n * dim` and columns as `m * dim` concatenated coefficients.
pub trait BochnerView {
    fn shape(&self) -> (usize, usize);
    fn spec(&self) -> &Arc<InnerProductSpec>;
    fn entry(&self, i: usize, j: usize) -> Result<Vec<f64>>;
    fn row(&self, i: usize) -> Result<Vec<f64>>;
    fn col(&self, j: usize) -> Result<Vec<f64>>;

    /// Reads every row into a dense matrix.
    fn materialize(&self) -> Result<BochnerMatrix> {
        let (m, n) = self.shape();
        let mut data = Vec::with_capacity(m * n * self.spec().dim());
        for i in 1..=m {
            data.extend(self.row(i)?);
        }
        BochnerMatrix::from_flat(m, n, self.spec().clone(), data)
    }
}

impl BochnerView for BochnerMatrix {
    fn shape(&self) -> (usize, usize) {
        BochnerMatrix::shape(self)
    }

    fn spec(&self) -> &Arc<InnerProductSpec> {
        BochnerMatrix::spec(self)
    }

    fn entry(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        Ok(self.entry_coeffs(i, j)?.to_vec())
    }

    fn row(&self, i: usize) -> Result<Vec<f64>> {
        Ok(self.row_coeffs(i)?.to_vec())
    }

    fn col(&self, j: usize) -> Result<Vec<f64>> {
        self.col_coeffs(j)
    }

    fn materialize(&self) -> Result<BochnerMatrix> {
        Ok(self.clone())
    }
}

fn check_index(i: usize, bound: usize) -> Result<()> {
    if i == 0 || i > bound {
        Err(Error::OutOfBounds { index: i, bound })
    } else {
        Ok(())
    }
}

/// Rank-one term `g · u vᵀ` produced at pivot `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyad {
    pub g: HElement,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// 1-based pivot position; `u[i-1] = v[j-1] = 1`.
    pub pivot: (usize, usize),
}

impl Dyad {
    /// Adds `alpha * u[i] * v[l] * g` over all `l` to a row buffer.
    fn add_to_row(&self, alpha: f64, i: usize, row: &mut [f64]) {
        let ui = self.u[i - 1];
        if ui == 0.0 {
            return;
        }
        let g = self.g.coeffs();
        for (chunk, &vl) in row.chunks_exact_mut(g.len()).zip(&self.v) {
            if vl != 0.0 {
                axpy(alpha * ui * vl, g, chunk);
            }
        }
    }

    fn add_to_col(&self, alpha: f64, j: usize, col: &mut [f64]) {
        let vj = self.v[j - 1];
        if vj == 0.0 {
            return;
        }
        let g = self.g.coeffs();
        for (chunk, &uk) in col.chunks_exact_mut(g.len()).zip(&self.u) {
            if uk != 0.0 {
                axpy(alpha * uk * vj, g, chunk);
            }
        }
    }

    pub fn densify(&self) -> Result<BochnerMatrix> {
        let dim = self.g.spec().dim();
        let mut data = vec![0.0; self.u.len() * self.v.len() * dim];
        for (i, row) in data.chunks_exact_mut(self.v.len() * dim).enumerate() {
            self.add_to_row(1.0, i + 1, row);
        }
        BochnerMatrix::from_flat(self.u.len(), self.v.len(), self.g.spec().clone(), data)
    }
}

/// Sum of dyads over a fixed shape.
#[derive(Debug, Clone)]
pub struct DyadicForm {
    pub shape: (usize, usize),
    pub spec: Arc<InnerProductSpec>,
    pub terms: Vec<Dyad>,
}

impl DyadicForm {
    pub fn new(shape: (usize, usize), spec: Arc<InnerProductSpec>) -> Self {
        Self {
            shape,
            spec,
            terms: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn densify(&self) -> Result<BochnerMatrix> {
        let (m, n) = self.shape;
        let dim = self.spec.dim();
        let mut data = vec![0.0; m * n * dim];
        for (i, row) in data.chunks_exact_mut(n * dim).enumerate() {
            for d in &self.terms {
                d.add_to_row(1.0, i + 1, row);
            }
        }
        BochnerMatrix::from_flat(m, n, self.spec.clone(), data)
    }
}

/// `base − Σ dyads`, evaluated on demand.
pub struct ResidualView<'a, V: BochnerView + ?Sized> {
    base: &'a V,
    dyads: &'a [Dyad],
}

impl<'a, V: BochnerView + ?Sized> ResidualView<'a, V> {
    pub fn new(base: &'a V, dyads: &'a [Dyad]) -> Self {
        Self { base, dyads }
    }
}

impl<V: BochnerView + ?Sized> BochnerView for ResidualView<'_, V> {
    fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    fn spec(&self) -> &Arc<InnerProductSpec> {
        self.base.spec()
    }

    fn entry(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        let mut e = self.base.entry(i, j)?;
        for d in self.dyads {
            let c = d.u[i - 1] * d.v[j - 1];
            if c != 0.0 {
                axpy(-c, d.g.coeffs(), &mut e);
            }
        }
        Ok(e)
    }

    fn row(&self, i: usize) -> Result<Vec<f64>> {
        let mut r = self.base.row(i)?;
        for d in self.dyads {
            d.add_to_row(-1.0, i, &mut r);
        }
        Ok(r)
    }

    fn col(&self, j: usize) -> Result<Vec<f64>> {
        let mut c = self.base.col(j)?;
        for d in self.dyads {
            d.add_to_col(-1.0, j, &mut c);
        }
        Ok(c)
    }
}

/// `base − X·core·Y`, evaluated on demand.
pub struct DifferenceView<'a, V: BochnerView + ?Sized> {
    base: &'a V,
    x: &'a crate::densela::DenseMatrix,
    y: &'a crate::densela::DenseMatrix,
    core_y: BochnerMatrix,
    x_core: BochnerMatrix,
}

impl<'a, V: BochnerView + ?Sized> DifferenceView<'a, V> {
    pub fn new(base: &'a V, approx: &'a TuckerForm) -> Result<Self> {
        check_spec(base.spec(), approx.core.spec())?;
        if base.shape() != approx.shape() {
            return Err(Error::ShapeMismatch {
                op: "difference view",
                left: base.shape(),
                right: approx.shape(),
            });
        }
        Ok(Self {
            base,
            x: &approx.x,
            y: &approx.y,
            core_y: approx.core.right_multiply(&approx.y)?,
            x_core: approx.core.left_multiply(&approx.x)?,
        })
    }
}

impl<V: BochnerView + ?Sized> BochnerView for DifferenceView<'_, V> {
    fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    fn spec(&self) -> &Arc<InnerProductSpec> {
        self.base.spec()
    }

    fn entry(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        let mut e = self.base.entry(i, j)?;
        for t in 0..self.y.rows() {
            let c = self.y[(t, j - 1)];
            if c != 0.0 {
                axpy(-c, self.x_core.entry0(i - 1, t), &mut e);
            }
        }
        Ok(e)
    }

    fn row(&self, i: usize) -> Result<Vec<f64>> {
        let mut r = self.base.row(i)?;
        for s in 0..self.x.cols() {
            let c = self.x[(i - 1, s)];
            if c != 0.0 {
                axpy(-c, self.core_y.row0(s), &mut r);
            }
        }
        Ok(r)
    }

    fn col(&self, j: usize) -> Result<Vec<f64>> {
        let mut c = self.base.col(j)?;
        let dim = self.spec().dim();
        for t in 0..self.y.rows() {
            let w = self.y[(t, j - 1)];
            if w == 0.0 {
                continue;
            }
            for (k, chunk) in c.chunks_exact_mut(dim).enumerate() {
                axpy(-w, self.x_core.entry0(k, t), chunk);
            }
        }
        Ok(c)
    }
}

fn entry_norms(spec: &InnerProductSpec, slice: &[f64]) -> Vec<f64> {
    slice
        .chunks_exact(spec.dim())
        .map(|e| spec.norm_coeffs(e))
        .collect()
}

/// 1-based argmax, first index on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    best + 1
}

fn dyad_from_slices(
    spec: &Arc<InnerProductSpec>,
    row: &[f64],
    col: &[f64],
    i: usize,
    j: usize,
) -> Result<Dyad> {
    let dim = spec.dim();
    let g = row[(j - 1) * dim..j * dim].to_vec();
    let g_sq = spec.inner_coeffs(&g, &g);
    if !(g_sq > 0.0) {
        return Err(Error::ZeroPivot { i, j });
    }
    let mut u: Vec<f64> = col
        .chunks_exact(dim)
        .map(|e| spec.inner_coeffs(e, &g) / g_sq)
        .collect();
    let mut v: Vec<f64> = row
        .chunks_exact(dim)
        .map(|e| spec.inner_coeffs(e, &g) / g_sq)
        .collect();
    u[i - 1] = 1.0;
    v[j - 1] = 1.0;
    Ok(Dyad {
        g: HElement::new(spec.clone(), g)?,
        u,
        v,
        pivot: (i, j),
    })
}

/// Cross component at a single pivot: `g · u vᵀ` with
/// `u_k = <R(k,j), g>/‖g‖²` and `v_l = <R(i,l), g>/‖g‖²`.
pub fn rank_one_cross<V: BochnerView + ?Sized>(view: &V, i: usize, j: usize) -> Result<Dyad> {
    let (m, n) = view.shape();
    check_index(i, m)?;
    check_index(j, n)?;
    let row = view.row(i)?;
    let col = view.col(j)?;
    dyad_from_slices(view.spec(), &row, &col, i, j)
}

/// Alternating row/column argmax walk starting from column `j0`.
///
/// Each round moves to the largest entry in the current column and then to
/// the largest entry in that row. With `n_rook = 0` the result is the
/// column argmax paired with `j0`.
pub fn rook_pivot<V: BochnerView + ?Sized>(view: &V, j0: usize, n_rook: usize) -> Result<(usize, usize)> {
    let mut seen = 0.0;
    rook_walk(view, j0, n_rook, &mut seen)
}

fn rook_walk<V: BochnerView + ?Sized>(
    view: &V,
    j0: usize,
    n_rook: usize,
    seen: &mut f64,
) -> Result<(usize, usize)> {
    let (_, n) = view.shape();
    check_index(j0, n)?;
    let spec = view.spec().clone();
    let mut scan_col = |j: usize| -> Result<usize> {
        let norms = entry_norms(&spec, &view.col(j)?);
        *seen = norms.iter().fold(*seen, |a, &b| f64::max(a, b));
        Ok(argmax(&norms))
    };
    let mut i = scan_col(j0)?;
    let mut j = j0;
    for _ in 0..n_rook {
        let norms = entry_norms(view.spec(), &view.row(i)?);
        j = argmax(&norms);
        i = scan_col(j)?;
    }
    Ok((i, j))
}

/// One ABCD iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdStep {
    /// Row drawn at random before pivot refinement.
    pub drawn_row: usize,
    pub pivot: (usize, usize),
    pub pivot_norm: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct AbcdResult {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub dyads: DyadicForm,
    /// Residual norms at the accepted pivots.
    pub pivot_norms: Vec<f64>,
    pub steps: Vec<AbcdStep>,
}

impl AbcdResult {
    /// The result after the first `r` iterations, which equals a run with
    /// the same seed and iteration count `r`.
    pub fn prefix(&self, r: usize) -> AbcdResult {
        let steps: Vec<AbcdStep> = self.steps.iter().take(r).cloned().collect();
        let accepted = steps.iter().filter(|s| s.accepted).count();
        let mut rows = IndexSet::empty();
        let mut cols = IndexSet::empty();
        for s in steps.iter().filter(|s| s.accepted) {
            rows.insert(s.pivot.0);
            cols.insert(s.pivot.1);
        }
        AbcdResult {
            rows,
            cols,
            dyads: DyadicForm {
                shape: self.dyads.shape,
                spec: self.dyads.spec.clone(),
                terms: self.dyads.terms[..accepted].to_vec(),
            },
            pivot_norms: self.pivot_norms[..accepted].to_vec(),
            steps,
        }
    }
}

/// Adaptive Bochner cross-dyadic approximation with `r` iterations.
pub fn abcd<V: BochnerView + ?Sized>(view: &V, r: usize, n_rook: usize, seed: u64) -> Result<AbcdResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    abcd_with_rng(view, r, n_rook, &mut rng)
}

/// [`abcd`] drawing rows from a caller-owned generator.
pub fn abcd_with_rng<V: BochnerView + ?Sized>(
    view: &V,
    r: usize,
    n_rook: usize,
    rng: &mut impl Rng,
) -> Result<AbcdResult> {
    let (m, n) = view.shape();
    let spec = view.spec().clone();
    let mut dyads: Vec<Dyad> = Vec::new();
    let mut rows = IndexSet::empty();
    let mut cols = IndexSet::empty();
    let mut pivot_norms = Vec::new();
    let mut steps = Vec::with_capacity(r);
    let mut seen = 0.0_f64;

    for _ in 0..r {
        let drawn_row = rng.random_range(1..=m);
        let res = ResidualView::new(view, &dyads);
        let row = res.row(drawn_row)?;
        let row_norms = entry_norms(&spec, &row);
        seen = row_norms.iter().fold(seen, |a, &b| a.max(b));
        let j_start = argmax(&row_norms);
        let (i, j) = if n_rook == 0 {
            (drawn_row, j_start)
        } else {
            let mut walk_seen = seen;
            let p = rook_walk(&res, j_start, n_rook, &mut walk_seen)?;
            seen = walk_seen;
            p
        };
        let pivot_row = if i == drawn_row { row } else { res.row(i)? };
        let pivot_norm = spec.norm_coeffs(&pivot_row[(j - 1) * spec.dim()..j * spec.dim()]);
        seen = seen.max(pivot_norm);
        let accepted = pivot_norm > ZERO_PIVOT_RTOL * seen && pivot_norm > 0.0;
        if accepted {
            let col = res.col(j)?;
            let dyad = dyad_from_slices(&spec, &pivot_row, &col, i, j)?;
            rows.insert(i);
            cols.insert(j);
            pivot_norms.push(pivot_norm);
            dyads.push(dyad);
        }
        steps.push(AbcdStep {
            drawn_row,
            pivot: (i, j),
            pivot_norm,
            accepted,
        });
    }
    Ok(AbcdResult {
        rows,
        cols,
        dyads: DyadicForm {
            shape: (m, n),
            spec,
            terms: dyads,
        },
        pivot_norms,
        steps,
    })
}

/// Cross component `((Gᵀ)† Cᵀ)ᵀ · G · (G† R)` with `C = A(:,J)`,
/// `R = A(I,:)` and `G = A(I,J)`.
pub fn cross_component<V: BochnerView + ?Sized>(
    view: &V,
    rows: &IndexSet,
    cols: &IndexSet,
    rtol: f64,
) -> Result<TuckerForm> {
    let (m, n) = view.shape();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::ZeroBlock);
    }
    if let Some(&i) = rows.as_slice().last() {
        check_index(i, m)?;
    }
    if let Some(&j) = cols.as_slice().last() {
        check_index(j, n)?;
    }
    let spec = view.spec().clone();
    let dim = spec.dim();

    let mut r_data = Vec::with_capacity(rows.len() * n * dim);
    for i in rows.iter() {
        r_data.extend(view.row(i)?);
    }
    let r_mat = BochnerMatrix::from_flat(rows.len(), n, spec.clone(), r_data)?;
    let g = r_mat.select_columns(cols)?;
    if g.norm_l2() == 0.0 {
        return Err(Error::ZeroBlock);
    }

    // Cᵀ is |J| x m; its row t is column J_t of A.
    let mut ct_data = Vec::with_capacity(cols.len() * m * dim);
    for j in cols.iter() {
        ct_data.extend(view.col(j)?);
    }
    let ct = BochnerMatrix::from_flat(cols.len(), m, spec, ct_data)?;

    let svd_gt = bochner_svd(&g.transpose(), rtol)?;
    let x = pinv_apply(&svd_gt, &ct)?.transpose();
    let svd_g = bochner_svd(&g, rtol)?;
    let y = pinv_apply(&svd_g, &r_mat)?;
    Ok(TuckerForm { x, core: g, y })
}

/// Per-round record of an ABCDX run.
#[derive(Debug, Clone)]
pub struct AbcdxRound {
    pub rows: IndexSet,
    pub cols: IndexSet,
    /// Largest accepted pivot norm of the round's ABCD pass.
    pub max_pivot_norm: f64,
    /// Cross component at the accumulated indices; `None` while no index
    /// has been selected.
    pub approx: Option<TuckerForm>,
}

#[derive(Debug, Clone)]
pub struct AbcdxResult {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub approx: Option<TuckerForm>,
    pub rounds: Vec<AbcdxRound>,
}

#[derive(Debug, Clone, Copy)]
pub struct AbcdxOptions {
    pub n_abcd: usize,
    pub r: usize,
    pub n_rook: usize,
    pub seed: u64,
    /// Stop once a round's largest pivot falls to this fraction of the
    /// first pivot.
    pub stop_rtol: Option<f64>,
    /// Rank tolerance for the pseudoinverses in the cross component.
    pub rtol: f64,
}

/// Alternates ABCD index selection on `A − B` with recomputing
/// `B = cross(A)(I, J)` from the original matrix.
pub fn abcdx<V: BochnerView + ?Sized>(view: &V, opts: &AbcdxOptions) -> Result<AbcdxResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rows = IndexSet::empty();
    let mut cols = IndexSet::empty();
    let mut approx: Option<TuckerForm> = None;
    let mut rounds = Vec::new();
    let mut first_pivot: Option<f64> = None;

    for _ in 0..opts.n_abcd {
        let round = match &approx {
            None => abcd_with_rng(view, opts.r, opts.n_rook, &mut rng)?,
            Some(b) => {
                let diff = DifferenceView::new(view, b)?;
                abcd_with_rng(&diff, opts.r, opts.n_rook, &mut rng)?
            }
        };
        let max_pivot = round.pivot_norms.iter().fold(0.0_f64, |a, &b| a.max(b));
        if first_pivot.is_none() {
            first_pivot = round.pivot_norms.first().copied();
        }
        rows = rows.union(&round.rows);
        cols = cols.union(&round.cols);
        if !round.rows.is_empty() {
            approx = match cross_component(view, &rows, &cols, opts.rtol) {
                Ok(t) => Some(t),
                Err(Error::ZeroBlock) => None,
                Err(e) => return Err(e),
            };
        }
        rounds.push(AbcdxRound {
            rows: rows.clone(),
            cols: cols.clone(),
            max_pivot_norm: max_pivot,
            approx: approx.clone(),
        });
        if let Some(stop) = opts.stop_rtol {
            let reference = first_pivot.unwrap_or(0.0);
            if max_pivot <= stop * reference || round.pivot_norms.is_empty() {
                break;
            }
        }
    }
    Ok(AbcdxResult {
        rows,
        cols,
        approx,
        rounds,
    })
}
