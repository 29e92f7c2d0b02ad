//! Hilbert-space entries represented by finite coefficient vectors.
//!
//! An [`InnerProductSpec`] fixes the dimension and how two coefficient
//! vectors are paired. Every spec admits a whitening map `z = Wx` with
//! `<x, y> = z·w`; the decompositions run in whitened coordinates and map
//! their results back with [`InnerProductSpec::unwhiten`].

use std::sync::Arc;

use crate::densela::{cholesky, dot, DenseMatrix};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InnerKind {
    Diagonal { weights: Vec<f64> },
    Gram { gram: DenseMatrix },
}

#[derive(Debug, Clone, PartialEq)]
enum Whitener {
    Scale(Vec<f64>),
    /// Lower Cholesky factor `L` of the Gram matrix; whitening is `Lᵀx`.
    Cholesky(DenseMatrix),
}

/// Inner product on `R^dim`, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductSpec {
    dim: usize,
    kind: InnerKind,
    whitener: Whitener,
}

impl InnerProductSpec {
    pub fn euclidean(dim: usize) -> Arc<Self> {
        Self::diagonal(vec![1.0; dim]).expect("unit weights are valid")
    }

    pub fn diagonal(weights: Vec<f64>) -> Result<Arc<Self>> {
        if weights.is_empty() {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidSpec(format!("weight {w} is not positive")));
        }
        let scale = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Arc::new(Self {
            dim: weights.len(),
            kind: InnerKind::Diagonal { weights },
            whitener: Whitener::Scale(scale),
        }))
    }

    pub fn gram(gram: DenseMatrix) -> Result<Arc<Self>> {
        if gram.rows() == 0 || gram.rows() != gram.cols() {
            return Err(Error::InvalidSpec(format!(
                "Gram matrix must be square and non-empty, got {}x{}",
                gram.rows(),
                gram.cols()
            )));
        }
        if !gram.is_finite() || !gram.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidSpec("Gram matrix is not symmetric".into()));
        }
        let l = cholesky(&gram)
            .map_err(|e| Error::InvalidSpec(format!("Gram matrix is not positive definite: {e}")))?;
        Ok(Arc::new(Self {
            dim: gram.rows(),
            kind: InnerKind::Gram { gram },
            whitener: Whitener::Cholesky(l),
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &InnerKind {
        &self.kind
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.kind, InnerKind::Diagonal { .. })
    }

    /// Inner product of two coefficient vectors of length `dim`.
    pub fn inner_coeffs(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        match &self.kind {
            InnerKind::Diagonal { weights } => weights
                .iter()
                .zip(x.iter().zip(y))
                .map(|(w, (a, b))| w * a * b)
                .sum(),
            InnerKind::Gram { gram } => (0..self.dim)
                .map(|k| x[k] * dot(gram.row(k), y))
                .sum(),
        }
    }

    /// Sum of entrywise inner products of two blocks of concatenated
    /// coefficient vectors (the `l2(H)` pairing of Bochner vectors).
    pub fn inner_blocks(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        debug_assert_eq!(x.len() % self.dim, 0);
        x.chunks_exact(self.dim)
            .zip(y.chunks_exact(self.dim))
            .map(|(a, b)| self.inner_coeffs(a, b))
            .sum()
    }

    pub fn norm_coeffs(&self, x: &[f64]) -> f64 {
        self.inner_coeffs(x, x).max(0.0).sqrt()
    }

    /// Maps each `dim`-chunk of `x` to whitened coordinates in place.
    pub fn whiten(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len() % self.dim, 0);
        match &self.whitener {
            Whitener::Scale(s) => {
                for chunk in x.chunks_exact_mut(self.dim) {
                    chunk.iter_mut().zip(s).for_each(|(v, s)| *v *= s);
                }
            }
            Whitener::Cholesky(l) => {
                let n = self.dim;
                for chunk in x.chunks_exact_mut(n) {
                    // z_k = sum_{i >= k} L[i,k] x_i, written top-down so x_i for i > k is still intact
                    for k in 0..n {
                        let mut s = 0.0;
                        for i in k..n {
                            s += l[(i, k)] * chunk[i];
                        }
                        chunk[k] = s;
                    }
                }
            }
        }
    }

    /// Inverse of [`whiten`](Self::whiten).
    pub fn unwhiten(&self, z: &mut [f64]) {
        debug_assert_eq!(z.len() % self.dim, 0);
        match &self.whitener {
            Whitener::Scale(s) => {
                for chunk in z.chunks_exact_mut(self.dim) {
                    chunk.iter_mut().zip(s).for_each(|(v, s)| *v /= s);
                }
            }
            Whitener::Cholesky(l) => {
                let n = self.dim;
                for chunk in z.chunks_exact_mut(n) {
                    // back substitution with Lᵀ
                    for k in (0..n).rev() {
                        let mut s = chunk[k];
                        for i in (k + 1)..n {
                            s -= l[(i, k)] * chunk[i];
                        }
                        chunk[k] = s / l[(k, k)];
                    }
                }
            }
        }
    }
}

/// True when both handles refer to the same inner product.
pub fn same_spec(a: &Arc<InnerProductSpec>, b: &Arc<InnerProductSpec>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn check_spec(a: &Arc<InnerProductSpec>, b: &Arc<InnerProductSpec>) -> Result<()> {
    if same_spec(a, b) {
        Ok(())
    } else {
        Err(Error::SpecMismatch)
    }
}

/// One element of the Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct HElement {
    coeffs: Vec<f64>,
    spec: Arc<InnerProductSpec>,
}

impl HElement {
    pub fn new(spec: Arc<InnerProductSpec>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != spec.dim() {
            return Err(Error::LengthMismatch {
                expected: spec.dim(),
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { coeffs, spec })
    }

    pub fn zero(spec: Arc<InnerProductSpec>) -> Self {
        Self {
            coeffs: vec![0.0; spec.dim()],
            spec,
        }
    }

    /// The `k`-th coordinate vector (0-based `k`).
    pub fn basis(spec: Arc<InnerProductSpec>, k: usize) -> Self {
        let mut e = Self::zero(spec);
        e.coeffs[k] = 1.0;
        e
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn spec(&self) -> &Arc<InnerProductSpec> {
        &self.spec
    }

    pub fn norm(&self) -> f64 {
        self.spec.norm_coeffs(&self.coeffs)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
            spec: self.spec.clone(),
        }
    }
}

pub fn inner(x: &HElement, y: &HElement) -> Result<f64> {
    check_spec(&x.spec, &y.spec)?;
    Ok(x.spec.inner_coeffs(&x.coeffs, &y.coeffs))
}

/// `alpha * x + beta * y`
pub fn combine(alpha: f64, x: &HElement, beta: f64, y: &HElement) -> Result<HElement> {
    check_spec(&x.spec, &y.spec)?;
    Ok(HElement {
        coeffs: x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(a, b)| alpha * a + beta * b)
            .collect(),
        spec: x.spec.clone(),
    })
}

/// Matrix of pairwise inner products.
pub fn gram_matrix(xs: &[HElement]) -> Result<DenseMatrix> {
    let Some(first) = xs.first() else {
        return Ok(DenseMatrix::zeros(0, 0));
    };
    for x in xs {
        check_spec(&first.spec, &x.spec)?;
    }
    let dim = first.spec.dim();
    let mut z = Vec::with_capacity(xs.len() * dim);
    for x in xs {
        z.extend_from_slice(&x.coeffs);
    }
    first.spec.whiten(&mut z);
    Ok(gram_of_chunks(&z, dim))
}

/// Gram matrix of Euclidean row vectors of length `len` packed in `z`.
pub(crate) fn gram_of_chunks(z: &[f64], len: usize) -> DenseMatrix {
    let k = z.len().checked_div(len).unwrap_or(0);
    let mut g = DenseMatrix::zeros(k, k);
    for i in 0..k {
        let zi = &z[i * len..(i + 1) * len];
        for j in 0..=i {
            let v = dot(zi, &z[j * len..(j + 1) * len]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}
