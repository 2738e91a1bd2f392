use gauss_subord::gaussian_model::*;
use gauss_subord::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

#[test]
fn sampler_reproduces_covariance() {
    let model = StationaryModel::new(Autocorrelation::Geometric { r: 0.6 }, 2);
    let n = 6;
    let sampler = GaussianSampler::new(&model, n).unwrap();
    assert_eq!(sampler.sample(3), sampler.sample(3));
    assert_ne!(sampler.sample(3).values, sampler.sample(4).values);

    let reps = 20_000;
    let pairs: Vec<(f64, f64, f64)> = sampler.map_replicates(10, reps, |s| {
        let (a, b) = (s.row(0)[0], s.row(2)[1]);
        (a * b, a * a, b * b)
    });
    // X(0)^(0) = x_0, X(2)^(1) = x_3, covariance 0.6^3
    let prods: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let m = gauss_subord::stats::mean(&prods);
    let se = (gauss_subord::stats::variance(&prods) / reps as f64).sqrt();
    assert!((m - 0.216).abs() < 3.5 * se, "{m} {se}");
    let sq: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let se = (gauss_subord::stats::variance(&sq) / reps as f64).sqrt();
    assert!((gauss_subord::stats::mean(&sq) - 1.0).abs() < 3.5 * se);
}

#[test]
fn window_blocks() {
    let model = StationaryModel::new(Autocorrelation::Geometric { r: 0.5 }, 3);
    let b = model.cross_block(10, 2, 4);
    // (p, q) entry is rho(2 + q - p)
    for p in 0..3 {
        for q in 0..3 {
            let lag = (4 + q) as i64 - (2 + p) as i64;
            assert!((b[(p, q)] - 0.5f64.powi(lag.unsigned_abs() as i32)).abs() < 1e-15);
        }
    }
    assert_eq!(model.block(2), model.cross_block(5, 2, 0));
    let full = full_covariance(&model, 4);
    assert_eq!(full.nrows(), 12);
    assert!((&full - full.transpose()).abs().max() < 1e-15);
}

#[test]
fn fbm_increments() {
    // H = 1/2 increments are white
    for j in 1..5 {
        assert!(fgn_autocov(j, 0.5).abs() < 1e-15);
    }
    assert!((fgn_autocov(0, 0.7) - 1.0).abs() < 1e-15);
    // 1/2 ((j+1)^{2H} - 2 j^{2H} + (j-1)^{2H})
    let h = 0.7f64;
    let want = 0.5 * (3f64.powf(2.0 * h) - 2.0 * 2f64.powf(2.0 * h) + 1.0);
    assert!((fgn_autocov(2, h) - want).abs() < 1e-14);
    // second differences of Brownian motion: variance 2, lag-one covariance -1
    assert!((fbm_second_diff_autocov(0, 0.5) - 2.0).abs() < 1e-14);
    assert!((fbm_second_diff_autocov(1, 0.5) + 1.0).abs() < 1e-14);
    assert!(fbm_second_diff_autocov(2, 0.5).abs() < 1e-14);
}

#[test]
fn standardization() {
    let model = StationaryModel::new(Autocorrelation::FbmSecondDifference { hurst: 0.3 }, 2);
    let white = StandardizedModel::shared(model.clone()).unwrap();
    check_standardized(&white, 5, 1e-12).unwrap();
    assert!(matches!(check_standardized(&model, 5, 1e-12), Err(Error::NotStandardized { .. })));
    let t = white.tangent(0.5, 0).unwrap();
    assert!((t - DMatrix::identity(2, 2)).abs().max() < 1e-12);

    let s = sample_array(&model, 5, 1).unwrap();
    let marg: Vec<DMatrix<f64>> = (0..5).map(|k| model.marginal(5, k)).collect();
    let z = standardize(&s, &marg).unwrap();
    let a = white.map(0);
    for k in 0..5 {
        let x = nalgebra::DVector::from_column_slice(s.row(k));
        let w = a * x;
        assert!((w[0] - z.row(k)[0]).abs() < 1e-12 && (w[1] - z.row(k)[1]).abs() < 1e-12);
    }
}

#[test]
fn degenerate_covariance_refused() {
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!(inverse_sqrt(&cov).is_err());
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(covariance_factor(&bad).is_err());
}

#[test]
fn summability_diagnostics() {
    let g = StationaryModel::geometric(0.5);
    let r = check_conditions(&g, 2, &[8, 16, 32], &[2, 12]).unwrap();
    assert!(r.s1_bounded && r.tails_vanishing);
    // sum_j 4^{-|j|} over Z
    let env = r.envelope.unwrap();
    assert!((env.partial_sums.last().unwrap().1 - 5.0 / 3.0).abs() < 1e-12);
    assert!(env.stabilizing);
    // non-summable: rho(j) ~ j^{-1/2} with m = 1
    let slow = StationaryModel::new(Autocorrelation::Polynomial { c: 0.5, beta: 0.5 }, 1);
    let r = check_conditions(&slow, 1, &[8, 16, 32, 64], &[2]).unwrap();
    assert!(!r.s1_bounded);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn geometric_tail_bound_is_exact(r in 0.05f64..0.95, m in 1u32..4, cut in 0usize..30) {
        let acf = Autocorrelation::Geometric { r };
        let direct: f64 = 2.0 * (cut + 1..cut + 4000).map(|j| acf.at(j as i64).powi(m as i32)).sum::<f64>();
        let bound = acf.tail_bound(m, cut).unwrap();
        prop_assert!((bound - direct).abs() <= 1e-10 * bound.max(1e-300) + 1e-300);
    }

    #[test]
    fn polynomial_tail_bound_dominates(beta in 0.6f64..2.0, m in 2u32..4, cut in 1usize..50) {
        let acf = Autocorrelation::Polynomial { c: 0.8, beta };
        prop_assume!(m as f64 * beta > 1.1);
        let partial: f64 = 2.0 * (cut + 1..cut + 20_000).map(|j| acf.at(j as i64).abs().powi(m as i32)).sum::<f64>();
        prop_assert!(acf.tail_bound(m, cut).unwrap() >= partial);
    }

    #[test]
    fn sqrt_roundtrip(a in prop::collection::vec(-1.0f64..1.0, 9)) {
        let b = DMatrix::from_row_slice(3, 3, &a);
        let s = &b * b.transpose() + DMatrix::identity(3, 3) * 0.1;
        let r = matrix_sqrt(&s).unwrap();
        prop_assert!((&r * &r - &s).abs().max() < 1e-10);
        let ir = inverse_sqrt(&s).unwrap();
        prop_assert!((&ir * &s * &ir - DMatrix::identity(3, 3)).abs().max() < 1e-9);
        prop_assert!(min_eigenvalue(&s) > 0.0);
        prop_assert!(spectral_norm(&s) >= s[(0, 0)] - 1e-12);
    }
}
