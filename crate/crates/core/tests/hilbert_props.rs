mod common;

use bmx_core::{combine, gram_matrix, inner, HElement};
use common::{random_element, random_spec, reference_eigenvalues, rng};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(seed in any::<u64>(), dim in 1usize..12, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let x = random_element(&spec, &mut r);
        let y = random_element(&spec, &mut r);
        let ip = inner(&x, &y).unwrap();
        prop_assert!(ip.abs() <= x.norm() * y.norm() * (1.0 + 1e-12));
        prop_assert!(inner(&x, &x).unwrap() >= 0.0);
        prop_assert!((ip - inner(&y, &x).unwrap()).abs() <= 1e-14 * (1.0 + ip.abs()));
    }

    #[test]
    fn bilinear(seed in any::<u64>(), dim in 1usize..12, gram in any::<bool>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let x = random_element(&spec, &mut r);
        let y = random_element(&spec, &mut r);
        let z = random_element(&spec, &mut r);
        let lhs = inner(&combine(a, &x, b, &y).unwrap(), &z).unwrap();
        let rhs = a * inner(&x, &z).unwrap() + b * inner(&y, &z).unwrap();
        let scale = (a.abs() * x.norm() + b.abs() * y.norm()) * z.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn variational_norm(seed in any::<u64>(), dim in 1usize..12, gram in any::<bool>()) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let h = random_element(&spec, &mut r);
        for _ in 0..10 {
            let g = random_element(&spec, &mut r);
            let g = g.scaled(1.0 / g.norm());
            prop_assert!(inner(&g, &h).unwrap().abs() <= h.norm() * (1.0 + 1e-12));
        }
        let unit = h.scaled(1.0 / h.norm());
        prop_assert!((inner(&unit, &h).unwrap() - h.norm()).abs() <= 1e-12 * h.norm());
    }

    #[test]
    fn gram_matrix_matches_pairwise(seed in any::<u64>(), dim in 1usize..10, gram in any::<bool>(), count in 1usize..6) {
        let mut r = rng(seed);
        let spec = random_spec(dim, gram, &mut r);
        let xs: Vec<HElement> = (0..count).map(|_| random_element(&spec, &mut r)).collect();
        let g = gram_matrix(&xs).unwrap();
        let mut trace = 0.0;
        for i in 0..count {
            trace += g[(i, i)];
            for j in 0..count {
                let direct = inner(&xs[i], &xs[j]).unwrap();
                prop_assert!((g[(i, j)] - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
        let min_eig = *reference_eigenvalues(&g).last().unwrap();
        prop_assert!(min_eig >= -1e-12 * trace);
    }
}
