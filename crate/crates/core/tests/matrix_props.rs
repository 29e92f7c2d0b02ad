mod common;

use bmx_core::{
    adjoint_product, bochner_svd, column_rank, l2_inner, row_rank, spectral_norm_lb, stock_dimension, BochnerMatrix,
    DenseMatrix, HElement, IndexSet, InnerProductSpec, LpNorm, Side, BOCHNER_RTOL,
};
use common::{orthonormal_matrix, random_dense, random_spec, rel, rng};
use proptest::prelude::*;

fn linf_diff(a: &BochnerMatrix, b: &BochnerMatrix) -> f64 {
    a.sub(b).unwrap().lp_norm(LpNorm::Inf)
}

#[test]
fn orthonormal_entries_norms() {
    for gram in [false, true] {
        let spec = random_spec(12, gram, &mut rng(1));
        let a = orthonormal_matrix(3, 4, &spec);
        assert!(rel(a.lp_norm(LpNorm::Two), 12f64.sqrt()) < 1e-12);
        assert!(rel(a.lp_norm(LpNorm::Inf), 1.0) < 1e-12);
        let lb = spectral_norm_lb(&a, 8, 50);
        assert!((lb - 1.0).abs() < 1e-10, "lb = {lb}");
        assert_eq!(stock_dimension(&a, 1e-10).value, 12);
        assert_eq!(column_rank(&a, BOCHNER_RTOL), 4);
        assert_eq!(row_rank(&a, BOCHNER_RTOL), 3);
    }
}

#[test]
fn orthonormal_columns_give_identity_adjoint() {
    let spec = InnerProductSpec::euclidean(6);
    let a = orthonormal_matrix(2, 3, &spec).scaled(1.0 / 2f64.sqrt());
    let g = adjoint_product(&a, &a).unwrap();
    assert!(g.sub(&DenseMatrix::identity(3)).max_abs() < 1e-15);
}

#[test]
fn single_column_adjoint_is_squared_norm() {
    let mut r = rng(2);
    let spec = random_spec(4, true, &mut r);
    let a = BochnerMatrix::random(5, 1, spec, &mut r).unwrap();
    let g = adjoint_product(&a, &a).unwrap();
    assert!(rel(g[(0, 0)], a.norm_l2().powi(2)) < 1e-12);
}

#[test]
fn rank_one_spectral_norm() {
    let spec = InnerProductSpec::euclidean(3);
    let h = HElement::new(spec, vec![0.0, 0.6, 0.8]).unwrap();
    let x = [0.6, 0.8];
    let y = [0.28, 0.0, 0.96];
    let a = BochnerMatrix::outer(&h, &DenseMatrix::from_fn(2, 3, |i, j| x[i] * y[j])).unwrap();
    assert!((spectral_norm_lb(&a, 8, 50) - 1.0).abs() < 1e-12);
}

#[test]
fn zero_matrix_norms() {
    let z = BochnerMatrix::zeros(2, 3, InnerProductSpec::euclidean(2)).unwrap();
    for p in [LpNorm::One, LpNorm::Two, LpNorm::Inf] {
        assert_eq!(z.lp_norm(p), 0.0);
    }
}

#[test]
fn submatrix_basics() {
    let mut r = rng(3);
    let spec = random_spec(3, false, &mut r);
    let a = BochnerMatrix::random(4, 5, spec, &mut r).unwrap();
    assert_eq!(a.submatrix(&IndexSet::full(4), &IndexSet::full(5)).unwrap(), a);
    let one = a.submatrix(&IndexSet::new(vec![3], 4).unwrap(), &IndexSet::new(vec![2], 5).unwrap()).unwrap();
    assert_eq!(one.entry(1, 1).unwrap(), a.entry(3, 2).unwrap());
    let i = IndexSet::new(vec![1, 4], 4).unwrap();
    let j = IndexSet::new(vec![2, 3, 5], 5).unwrap();
    assert_eq!(a.submatrix(&i, &j).unwrap().transpose(), a.transpose().submatrix(&j, &i).unwrap());
    assert!(a.submatrix(&IndexSet::new(vec![1], 4).unwrap(), &IndexSet::new(vec![6], 6).unwrap()).is_err());
}

#[test]
fn one_to_inf_operator_norm_is_max_entry() {
    let mut r = rng(4);
    let spec = random_spec(3, true, &mut r);
    let a = BochnerMatrix::random(4, 6, spec, &mut r).unwrap();
    // the unit l1 ball is the convex hull of ±e_j, so the maximum is at a basis vector
    let best = (0..6)
        .map(|j| {
            let mut e = vec![0.0; 6];
            e[j] = 1.0;
            a.apply(&e).unwrap().lp_norm(LpNorm::Inf)
        })
        .fold(0.0, f64::max);
    assert!(rel(best, a.lp_norm(LpNorm::Inf)) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mode_products_associate(seed in any::<u64>(), m in 1usize..5, n in 1usize..5, dim in 1usize..5, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let a = BochnerMatrix::random(m, n, spec, &mut r).unwrap();
        let c = random_dense(3, m, &mut r);
        let e = random_dense(n, 2, &mut r);
        let left_first = a.mode_multiply(Side::Left, &c).unwrap().mode_multiply(Side::Right, &e).unwrap();
        let right_first = a.mode_multiply(Side::Right, &e).unwrap().mode_multiply(Side::Left, &c).unwrap();
        prop_assert!(linf_diff(&left_first, &right_first) <= 1e-12 * (1.0 + left_first.norm_max()));
        // (BAC)ᵀ = Cᵀ Aᵀ Bᵀ
        let t1 = left_first.transpose();
        let t2 = a.transpose().left_multiply(&e.transpose()).unwrap().right_multiply(&c.transpose()).unwrap();
        prop_assert!(linf_diff(&t1, &t2) <= 1e-12 * (1.0 + t1.norm_max()));
        prop_assert_eq!(a.transpose().transpose(), a.clone());
        for p in [LpNorm::One, LpNorm::Two, LpNorm::Inf] {
            prop_assert!(rel(a.transpose().lp_norm(p), a.lp_norm(p)) <= 1e-14);
        }
    }

    #[test]
    fn adjoint_product_symmetry(seed in any::<u64>(), m in 1usize..5, n in 1usize..5, k in 1usize..5, dim in 1usize..5, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let a = BochnerMatrix::random(m, n, spec.clone(), &mut r).unwrap();
        let b = BochnerMatrix::random(m, k, spec, &mut r).unwrap();
        let ab = adjoint_product(&a, &b).unwrap();
        let ba = adjoint_product(&b, &a).unwrap();
        prop_assert!(ab.sub(&ba.transpose()).max_abs() <= 1e-12 * (1.0 + ab.max_abs()));
        // direct entry formula
        for i in 0..n {
            for j in 0..k {
                let direct: f64 = (1..=m)
                    .map(|s| bmx_core::inner(&b.entry(s, j + 1).unwrap(), &a.entry(s, i + 1).unwrap()).unwrap())
                    .sum();
                prop_assert!((ab[(i, j)] - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn norm_sandwich_and_holder(seed in any::<u64>(), m in 1usize..6, n in 1usize..6, dim in 1usize..5, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let a = BochnerMatrix::random(m, n, spec.clone(), &mut r).unwrap();
        let b = BochnerMatrix::random(m, n, spec, &mut r).unwrap();
        let (l1, l2, linf) = (a.lp_norm(LpNorm::One), a.lp_norm(LpNorm::Two), a.lp_norm(LpNorm::Inf));
        let slack = 1.0 + 1e-12;
        prop_assert!(linf <= l2 * slack && l2 <= l1 * slack && l1 <= (m * n) as f64 * linf * slack);
        prop_assert!(rel(l2_inner(&a, &a).unwrap(), l2 * l2) <= 1e-12);
        prop_assert!(l2_inner(&a, &b).unwrap().abs() <= l2 * b.norm_l2() * slack);
        let sp = spectral_norm_lb(&a, 8, 50);
        prop_assert!(sp >= linf * (1.0 - 1e-12) && sp <= l2 * slack);
    }

    #[test]
    fn stock_bounds_ranks(seed in any::<u64>(), m in 1usize..5, n in 1usize..5, dim in 1usize..4) {
        let mut r = rng(seed);
        let spec = random_spec(dim, false, &mut r);
        let a = BochnerMatrix::random(m, n, spec, &mut r).unwrap();
        let stock = stock_dimension(&a, 1e-12).value;
        prop_assert!(column_rank(&a, BOCHNER_RTOL) <= (stock * m).min(n));
        prop_assert!(row_rank(&a, BOCHNER_RTOL) <= m.min(stock * n));
    }

    #[test]
    fn orthonormal_dense_factor_is_isometry(seed in any::<u64>(), m in 1usize..5, n in 1usize..5, dim in 1usize..4, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let x = BochnerMatrix::random(m, n, spec, &mut r).unwrap();
        let q = bmx_core::densela::qr(&random_dense(m + 3, m, &mut r)).unwrap().q;
        let qx = x.left_multiply(&q).unwrap();
        prop_assert!(rel(qx.norm_l2(), x.norm_l2()) <= 1e-12);
    }

    #[test]
    fn interlacing_and_weyl(seed in any::<u64>(), dim in 1usize..4, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let (m, n) = (5, 4);
        let a = BochnerMatrix::random(m, n, spec.clone(), &mut r).unwrap();
        let b = BochnerMatrix::random(m, n, spec, &mut r).unwrap();
        let sv = |x: &BochnerMatrix| {
            let mut s = bochner_svd(x, 1e-14).unwrap().sigma;
            s.resize(n, 0.0);
            s
        };
        let sa = sv(&a);
        let sb = sv(&b);
        let sab = sv(&a.combine(1.0, &b, 1.0).unwrap());
        let cols = IndexSet::new(vec![1, 3], n).unwrap();
        let mut sub = bochner_svd(&a.select_columns(&cols).unwrap(), 1e-14).unwrap().sigma;
        sub.resize(cols.len(), 0.0);
        let drop = n - cols.len();
        for i in 0..cols.len() {
            prop_assert!(sa[i] + 1e-10 >= sub[i]);
            if i + drop < n {
                prop_assert!(sub[i] + 1e-10 >= sa[i + drop]);
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i + j < n {
                    prop_assert!(sab[i + j] <= sa[i] + sb[j] + 1e-10);
                }
            }
        }
    }
}
