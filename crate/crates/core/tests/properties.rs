use eigenshrink::io::{decode_eigs, encode_eigs, matrix_to_csv, parse_csv};
use eigenshrink::random::haar_orthogonal;
use eigenshrink::{
    adjusted_loglik, assemble, decompose, lambda_kappa, lambda_one, lambda_one_ns, lambda_zero, loss, seed,
    CovarianceEstimate, DataMatrix, LossKind, SampleSpectrum, DEFAULT_RANK_TOL,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spectrum() -> impl Strategy<Value = SampleSpectrum> {
    (1usize..=8, 0usize..60).prop_flat_map(|(q, extra)| {
        prop::collection::vec(-3.0f64..4.0, q).prop_filter_map("distinct eigenvalues", move |logs| {
            let mut ell: Vec<f64> = logs.iter().map(|v| v.exp()).collect();
            ell.sort_by(|a, b| b.total_cmp(a));
            if ell.windows(2).any(|w| w[0] - w[1] < 1e-6 * w[0]) {
                return None;
            }
            SampleSpectrum::from_eigenvalues(q + extra, ell).ok()
        })
    })
}

fn data(max_n: usize, max_p: usize) -> impl Strategy<Value = DataMatrix> {
    (2usize..=max_n, 2usize..=max_p, any::<u64>()).prop_map(|(n, p, s)| {
        DataMatrix::new(eigenshrink::random::gaussian_matrix(n, p, &mut seed::rng(s))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kappa_mixture_order_and_trace(spec in spectrum(), kappa in 0.0f64..0.999) {
        let lam = lambda_kappa(&spec, kappa).unwrap();
        let q = spec.q();
        prop_assert!(lam.lambda_hat.iter().all(|&v| v > 0.0));
        prop_assert!(lam.lambda_hat.windows(2).all(|w| w[0] >= w[1]));
        if kappa > 0.0 {
            prop_assert!(lam.lambda_hat[..q].windows(2).all(|w| w[0] > w[1]));
        }
        prop_assert!((lam.scaled_sum() - spec.trace()).abs() <= 1e-10 * spec.trace());
    }

    #[test]
    fn kappa_mixture_is_affine(spec in spectrum(), kappa in 0.0f64..0.999) {
        let (l0, l1) = (lambda_zero(&spec).lambda_hat, lambda_one(&spec).lambda_hat);
        let lk = lambda_kappa(&spec, kappa).unwrap().lambda_hat;
        for i in 0..spec.p() {
            let want = kappa * l1[i] + (1.0 - kappa) * l0[i];
            prop_assert!((lk[i] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn ns_tail_repeats_last_leading(spec in spectrum()) {
        let ns = lambda_one_ns(&spec).lambda_hat;
        let q = spec.q();
        prop_assert!(ns[q..].iter().all(|&v| v == ns[q - 1]));
    }

    #[test]
    fn flat_estimate_maximizes_isotropic_directions(spec in spectrum(), scale in 0.2f64..5.0) {
        let l0 = lambda_zero(&spec).lambda_hat;
        let scaled: Vec<f64> = l0.iter().map(|v| v * scale).collect();
        prop_assert!(adjusted_loglik(&l0, &spec).unwrap() >= adjusted_loglik(&scaled, &spec).unwrap() - 1e-9);
    }

    #[test]
    fn decompose_reconstructs_gram(x in data(12, 30)) {
        let spec = decompose(&x, DEFAULT_RANK_TOL).unwrap();
        let h = spec.frame();
        let s = x.values().transpose() * x.values();
        let rebuilt = h * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(spec.ell())) * h.transpose();
        prop_assert!((&rebuilt - &s).amax() <= 1e-9 * s.amax());
        prop_assert!(spec.q() <= x.rows().min(x.cols()));
        let gram = h.transpose() * h;
        prop_assert!((gram - DMatrix::identity(spec.q(), spec.q())).amax() < 1e-10);
    }

    #[test]
    fn estimate_commutes_with_rotation(x in data(8, 16), s in any::<u64>(), kappa in 0.0f64..0.95) {
        let g = haar_orthogonal(x.cols(), &mut seed::rng(s));
        let est = |x: &DataMatrix| {
            let spec = decompose(x, DEFAULT_RANK_TOL).unwrap();
            assemble(&spec, &lambda_kappa(&spec, kappa).unwrap()).unwrap().dense().clone()
        };
        let a = est(&x);
        let b = est(&x.rotated(&g).unwrap());
        prop_assert!((&b - &g * &a * g.transpose()).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn losses_are_rotation_invariant_except_onenorm(p in 2usize..7, sx in any::<u64>(), sy in any::<u64>(), s in any::<u64>()) {
        let spd = |seed_: u64| {
            let m = eigenshrink::random::gaussian_matrix(p + 4, p, &mut seed::rng(seed_));
            CovarianceEstimate::from_dense(m.transpose() * m).unwrap()
        };
        let (a, b) = (spd(sx), spd(sy));
        let g = haar_orthogonal(p, &mut seed::rng(s));
        let (ar, br) = (a.rotated(&g).unwrap(), b.rotated(&g).unwrap());
        // The matrix one-norm depends on the basis; every other loss does not.
        for kind in LossKind::ALL.into_iter().filter(|&k| k != LossKind::OneNorm) {
            let v = loss(kind, &a, &b).unwrap().value;
            let w = loss(kind, &ar, &br).unwrap().value;
            prop_assert!(v >= -1e-12);
            prop_assert!((v - w).abs() <= 1e-8 * v.abs().max(1.0), "{kind}: {v} vs {w}");
        }
    }

    #[test]
    fn matrix_files_round_trip(rows in 1usize..6, cols in 1usize..6, s in any::<u64>()) {
        let m = eigenshrink::random::gaussian_matrix(rows, cols, &mut seed::rng(s)) * 1e3;
        prop_assert_eq!(&decode_eigs(&encode_eigs(&m).unwrap()).unwrap(), &m);
        prop_assert_eq!(&parse_csv(&matrix_to_csv(&m), false).unwrap(), &m);
    }
}
