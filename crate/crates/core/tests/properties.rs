use hankel_core::block::BhhbTensor;
use hankel_core::decomposition::tls_solve;
use hankel_core::expfit::{khatri_rao, selection, vandermonde, Shift};
use hankel_core::fft::{fft1, ifft1};
use hankel_core::hankel::HankelPlan;
use hankel_core::tensor::{fold, relative_error, tvp_contract, unfold};
use hankel_core::{Complex64, ComplexMatrix, DenseTensor, HankelTensor};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), n)
}

/// Hankel shape, generating vector and one vector per mode.
fn hankel_case() -> impl Strategy<Value = (Vec<usize>, Vec<Complex64>, Vec<Vec<Complex64>>)> {
    prop::collection::vec(1usize..=5, 2..=4).prop_flat_map(|dims| {
        let d = dims.iter().sum::<usize>() + 1 - dims.len();
        let xs: Vec<_> = dims.iter().map(|&n| cvec(n)).collect();
        (Just(dims), cvec(d), xs)
    })
}

fn slices(xs: &[Vec<Complex64>]) -> Vec<&[Complex64]> {
    xs.iter().map(Vec::as_slice).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_roundtrip(x in (1usize..40).prop_flat_map(cvec)) {
        let back = ifft1(&fft1(&x).unwrap()).unwrap();
        prop_assert!(relative_error(&back, &x) < 1e-12);
    }

    #[test]
    fn fast_partial_matches_dense((dims, h, xs) in hankel_case()) {
        let t = HankelTensor::new(h, dims).unwrap();
        let dense = t.to_dense().unwrap();
        let fast = t.tvp_partial(&slices(&xs[1..])).unwrap();
        let slow = tvp_contract(&dense, &slices(&xs[1..])).unwrap();
        prop_assert!(relative_error(&fast, &slow) < 1e-11);
    }

    #[test]
    fn full_product_is_inner_product_of_partial((dims, h, xs) in hankel_case()) {
        let t = HankelTensor::new(h, dims).unwrap();
        let y = t.tvp_partial(&slices(&xs[1..])).unwrap();
        let expected: Complex64 = y.iter().zip(&xs[0]).map(|(a, b)| a * b).sum();
        let full = t.tvp_full(&slices(&xs)).unwrap();
        prop_assert!((full - expected).norm() <= 1e-11 * expected.norm().max(1.0));
    }

    #[test]
    fn partial_product_is_linear((dims, h, xs) in hankel_case(), a in complex()) {
        let t = HankelTensor::new(h, dims).unwrap();
        let mut scaled = xs.clone();
        scaled[1].iter_mut().for_each(|v| *v *= a);
        let y = t.tvp_partial(&slices(&xs[1..])).unwrap();
        let ys = t.tvp_partial(&slices(&scaled[1..])).unwrap();
        let expected: Vec<Complex64> = y.iter().map(|v| v * a).collect();
        prop_assert!(relative_error(&ys, &expected) < 1e-11 || expected.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn square_full_product_is_symmetric(n in 1usize..6, m in 2usize..5, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut r = |len: usize| -> Vec<Complex64> {
            (0..len).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
        };
        let t = HankelTensor::square(r(m * (n - 1) + 1), m).unwrap();
        let xs: Vec<Vec<Complex64>> = (0..m).map(|_| r(n)).collect();
        let mut rev = xs.clone();
        rev.reverse();
        let a = t.tvp_full(&slices(&xs)).unwrap();
        let b = t.tvp_full(&slices(&rev)).unwrap();
        prop_assert!((a - b).norm() <= 1e-11 * a.norm().max(1.0));
    }

    #[test]
    fn longer_embedding_gives_same_product((dims, h, xs) in hankel_case(), extra in 0usize..9) {
        let t = HankelTensor::new(h, dims).unwrap();
        let plan = HankelPlan::with_length(&t, t.degree_of_freedom() + extra).unwrap();
        let a = plan.tvp_partial(&slices(&xs[1..])).unwrap();
        let b = t.tvp_partial(&slices(&xs[1..])).unwrap();
        prop_assert!(relative_error(&a, &b) < 1e-11 || b.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn unit_blocks_reduce_to_hankel((dims, h, xs) in hankel_case()) {
        let m = dims.len();
        let b = BhhbTensor::new(ComplexMatrix::new(h.len(), 1, h.clone()).unwrap(), vec![1; m], dims.clone()).unwrap();
        let t = HankelTensor::new(h, dims).unwrap();
        let a = b.tvp_partial(&slices(&xs[1..])).unwrap();
        let e = t.tvp_partial(&slices(&xs[1..])).unwrap();
        prop_assert!(relative_error(&a, &e) < 1e-11 || e.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn unfold_fold_roundtrip(dims in prop::collection::vec(1usize..5, 1..=4), p_raw in 0usize..4, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = p_raw % dims.len();
        let a = DenseTensor::from_fn(dims.clone(), |_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).unwrap();
        let m = unfold(&a, p).unwrap();
        prop_assert_eq!(fold(&m, p, &dims).unwrap(), a);
    }

    #[test]
    fn tls_recovers_consistent_systems(k in 1usize..4, extra in 0usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut r = |rows: usize, cols: usize| {
            ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        };
        let a = r(k + extra, k);
        let w = r(k, k);
        let got = tls_solve(&a, &a.matmul(&w).unwrap()).unwrap();
        prop_assert!(got.sub(&w).unwrap().frobenius_norm() <= 1e-9 * w.frobenius_norm().max(1.0));
    }

    #[test]
    fn shift_invariance_of_vandermonde_factors(
        i in 2usize..5,
        j in 2usize..5,
        z1 in prop::collection::vec((0.5f64..1.2, -3.0f64..3.0), 1..4),
        z2 in prop::collection::vec((0.5f64..1.2, -3.0f64..3.0), 4),
    ) {
        let k = z1.len();
        let z1: Vec<Complex64> = z1.iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
        let z2: Vec<Complex64> = z2[..k].iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
        let a = khatri_rao(&vandermonde(&z2, j), &vandermonde(&z1, i)).unwrap();
        let diag = |z: &[Complex64]| ComplexMatrix::from_fn(k, k, |r, c| if r == c { z[r] } else { Complex64::new(0.0, 0.0) });
        let l1 = selection(&a, Shift::Up1, i, j).unwrap().matmul(&diag(&z1)).unwrap();
        let r1 = selection(&a, Shift::Down1, i, j).unwrap();
        prop_assert!(l1.sub(&r1).unwrap().frobenius_norm() <= 1e-12 * r1.frobenius_norm().max(1.0));
        let l2 = selection(&a, Shift::Up2, i, j).unwrap().matmul(&diag(&z2)).unwrap();
        let r2 = selection(&a, Shift::Down2, i, j).unwrap();
        prop_assert!(l2.sub(&r2).unwrap().frobenius_norm() <= 1e-12 * r2.frobenius_norm().max(1.0));
    }
}
