#![allow(dead_code)]

use std::sync::Arc;

use bmx_core::{BochnerMatrix, DenseMatrix, HElement, InnerProductSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Diagonal spec with weights in [0.5, 2) or a well-conditioned Gram spec.
pub fn random_spec(dim: usize, gram: bool, rng: &mut impl Rng) -> Arc<InnerProductSpec> {
    if gram {
        let b = random_dense(dim, dim, rng);
        let g = b.t_matmul(&b).add(&DenseMatrix::identity(dim).scaled(0.5));
        let g = DenseMatrix::from_fn(dim, dim, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        InnerProductSpec::gram(g).unwrap()
    } else {
        InnerProductSpec::diagonal((0..dim).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap()
    }
}

pub fn random_element(spec: &Arc<InnerProductSpec>, rng: &mut impl Rng) -> HElement {
    HElement::new(spec.clone(), (0..spec.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// `count` elements orthonormal under `spec` (requires `count <= dim`).
pub fn orthonormal_elements(spec: &Arc<InnerProductSpec>, count: usize) -> Vec<HElement> {
    assert!(count <= spec.dim());
    (0..count)
        .map(|k| {
            let mut z = vec![0.0; spec.dim()];
            z[k] = 1.0;
            spec.unwhiten(&mut z);
            HElement::new(spec.clone(), z).unwrap()
        })
        .collect()
}

/// `m x n` matrix whose entries are pairwise orthonormal.
pub fn orthonormal_matrix(m: usize, n: usize, spec: &Arc<InnerProductSpec>) -> BochnerMatrix {
    let e = orthonormal_elements(spec, m * n);
    let rows: Vec<Vec<HElement>> = (0..m).map(|i| (0..n).map(|j| e[i * n + j].clone()).collect()).collect();
    BochnerMatrix::from_entries(spec.clone(), &rows).unwrap()
}

/// `X · core · Y` with random factors: Tucker rank at most `(rho, kappa)`.
pub fn random_tucker(
    m: usize,
    n: usize,
    rho: usize,
    kappa: usize,
    spec: &Arc<InnerProductSpec>,
    rng: &mut impl Rng,
) -> BochnerMatrix {
    let core = BochnerMatrix::random(rho, kappa, spec.clone(), rng).unwrap();
    let x = random_dense(m, rho, rng);
    let y = random_dense(kappa, n, rng);
    core.right_multiply(&y).unwrap().left_multiply(&x).unwrap()
}

/// Classical Jacobi eigenvalue iteration (largest off-diagonal pivot),
/// eigenvalues in non-increasing order. Kept separate from the library
/// solver so it can serve as an independent reference.
pub fn reference_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut s: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for _ in 0..(100 * n * n + 100) {
        let mut p = 0;
        let mut q = 1.min(n.saturating_sub(1));
        let mut big = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if s[i][j].abs() > big {
                    big = s[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        let scale: f64 = (0..n).map(|i| s[i][i].abs()).sum::<f64>() + f64::MIN_POSITIVE;
        if big <= 1e-17 * scale {
            break;
        }
        let phi = 0.5 * (2.0 * s[p][q]).atan2(s[q][q] - s[p][p]);
        let (sn, cs) = phi.sin_cos();
        for k in 0..n {
            let skp = s[k][p];
            let skq = s[k][q];
            s[k][p] = cs * skp - sn * skq;
            s[k][q] = sn * skp + cs * skq;
        }
        for k in 0..n {
            let spk = s[p][k];
            let sqk = s[q][k];
            s[p][k] = cs * spk - sn * sqk;
            s[q][k] = sn * spk + cs * sqk;
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| s[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Relative difference `|a - b| / max(|b|, tiny)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
