use gauss_subord::clt_harness::{
    cross_expectation, cumulant_decay, cumulant_decay_cutoff, mc_clt, sigma_limit, sigma_n_detailed, sigma_n_squared,
    variance_bound_check, FunctionFamily, SubordinatedSumSpec,
};
use gauss_subord::gaussian_model::{Autocorrelation, StationaryModel};
use gauss_subord::hermite::{HermiteExpansion, MultiIndex};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn h(k: u32, c: f64) -> HermiteExpansion {
    HermiteExpansion::monomial(MultiIndex::scalar(k), c, k as usize).unwrap()
}

fn h2_curve(points: usize) -> FunctionFamily {
    let taus: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let exps = taus.iter().map(|t| h(2, 1.0 + t)).collect();
    FunctionFamily::curve(taus, exps).unwrap()
}

#[test]
fn breuer_major_limit_variance() {
    // sum_j 2 * 4^{-|j|} = 2 * 5/3
    let model = StationaryModel::geometric(0.5);
    let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(h(2, 1.0)), 2).unwrap();
    let lim = sigma_limit(&spec, 33, 60, 1e-10).unwrap();
    assert!((lim.value - 10.0 / 3.0).abs() < 1e-12, "{}", lim.value);
    let s = sigma_n_detailed(&spec, 4096).unwrap();
    assert!((s.value - lim.value).abs() < 1e-3);
    assert!(s.value < lim.value);
}

#[test]
fn nonstationary_limit_variance() {
    let model = StationaryModel::independent(1);
    let spec = SubordinatedSumSpec::new(&model, h2_curve(33), 2).unwrap();
    let lim = sigma_limit(&spec, 33, 4, 1e-10).unwrap();
    assert!((lim.value - 14.0 / 3.0).abs() < 1e-12);
    let n = 512;
    let exact: f64 = (1..=n).map(|k| 2.0 * (1.0 + k as f64 / n as f64).powi(2)).sum::<f64>() / n as f64;
    assert!((sigma_n_squared(&spec, n).unwrap() - exact).abs() < 1e-10);
}

#[test]
fn limit_variance_refuses_heavy_tail() {
    let model = StationaryModel::new(Autocorrelation::Polynomial { c: 0.5, beta: 0.6 }, 1);
    let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(h(2, 1.0)), 2).unwrap();
    assert!(sigma_limit(&spec, 33, 10, 1e-6).is_err());
}

#[test]
fn variance_bound_verdicts() {
    let iid = StationaryModel::independent(1);
    let spec = SubordinatedSumSpec::new(&iid, FunctionFamily::fixed(h(2, 1.0)), 2).unwrap();
    let r = variance_bound_check(&spec, &[8, 16, 32, 64], 1.05).unwrap();
    assert!(r.bounded);
    assert!(r.rows.iter().all(|row| (row.ratio - 1.0).abs() < 1e-12));

    let geo = StationaryModel::geometric(0.6);
    let spec = SubordinatedSumSpec::new(&geo, FunctionFamily::fixed(h(2, 1.0)), 2).unwrap();
    assert!(variance_bound_check(&spec, &[16, 32, 64, 128, 256, 512], 1.05).unwrap().bounded);

    let lrd = StationaryModel::new(Autocorrelation::Polynomial { c: 1.0, beta: 0.3 }, 1);
    let spec = SubordinatedSumSpec::new(&lrd, FunctionFamily::fixed(h(1, 1.0)), 1).unwrap();
    assert!(!variance_bound_check(&spec, &[16, 32, 64, 128, 256, 512], 1.05).unwrap().bounded);
}

#[test]
fn sigma_n_small_correlation_rate() {
    // rank-2 f: sigma_n^2 - ||f||^2 = O(eps^2)
    let f = h(2, 1.0);
    let mut diffs = Vec::new();
    for eps in [0.1, 0.05, 0.025] {
        let model = StationaryModel::geometric(eps);
        let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(f.clone()), 2).unwrap();
        diffs.push((sigma_n_squared(&spec, 64).unwrap() - 2.0).abs() / (eps * eps));
    }
    assert!(diffs.iter().all(|d| *d < 5.0), "{diffs:?}");
}

#[test]
fn mc_matches_sigma_n() {
    let model = StationaryModel::geometric(0.5);
    let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(h(2, 1.0)), 2).unwrap();
    let n = 128;
    let s2 = sigma_n_squared(&spec, n).unwrap();
    let r = mc_clt(&spec, n, 2000, 11, s2, Some(s2)).unwrap();
    assert!((r.empirical_variance - s2).abs() < 3.0 * r.variance_se, "{} vs {s2}", r.empirical_variance);
    let again = mc_clt(&spec, n, 2000, 11, s2, Some(s2)).unwrap();
    assert_eq!(r, again);
}

#[test]
fn mc_linear_case_is_normal() {
    for model in [StationaryModel::independent(1), StationaryModel::geometric(0.7)] {
        let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(h(1, 1.0)), 1).unwrap();
        let n = 64;
        let s2 = sigma_n_squared(&spec, n).unwrap();
        let r = mc_clt(&spec, n, 3000, 5, s2, Some(s2)).unwrap();
        assert!(r.ks_distance < r.ks_critical_01, "{}", r.ks_distance);
    }
}

#[test]
fn mc_refuses_zero_variance() {
    let model = StationaryModel::independent(1);
    let spec = SubordinatedSumSpec::new(&model, FunctionFamily::fixed(h(1, 1.0)), 1).unwrap();
    assert!(mc_clt(&spec, 8, 100, 0, 0.0, None).is_err());
}

#[test]
fn cumulant_decay_examples() {
    let ks = vec![MultiIndex::scalar(2); 3];
    let iid = StationaryModel::independent(1);
    let r = cumulant_decay(&ks, &iid, &[4, 6, 8]).unwrap();
    for row in &r.rows {
        assert!((row.sum_abs - 8.0 * row.n as f64).abs() < 1e-10);
    }
    let geo = StationaryModel::geometric(0.5);
    let n_list: Vec<usize> = (4..=12).collect();
    assert!(cumulant_decay(&ks, &geo, &n_list).unwrap().strictly_decreasing);
    let cut = cumulant_decay_cutoff(&ks, &geo, 8, (0, 1), &[0, 2, 4, 8]).unwrap();
    assert!(cut.windows(2).all(|w| w[1].1 <= w[0].1));
    assert_eq!(cut[3].1, 0.0);
}

#[test]
fn rejects_uncentered_family() {
    let model = StationaryModel::independent(1);
    let f = h(0, 1.0);
    assert!(SubordinatedSumSpec::new(&model, FunctionFamily::fixed(f), 0).is_err());
}

proptest! {
    #[test]
    fn same_vector_gives_norm(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0) {
        let coeffs = vec![
            (MultiIndex::new(vec![1, 0]), c1),
            (MultiIndex::new(vec![1, 1]), c2),
            (MultiIndex::new(vec![0, 3]), c3),
        ];
        let f = HermiteExpansion::from_coefficients(2, 3, coeffs, 0.0).unwrap();
        let v = cross_expectation(&f, &f, &DMatrix::identity(2, 2)).unwrap();
        prop_assert!((v - f.l2_norm_sq()).abs() < 1e-9 * f.l2_norm_sq().max(1.0));
    }

    #[test]
    fn arcones_rate(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, c3 in -1.0f64..1.0) {
        let coeffs = vec![
            (MultiIndex::new(vec![2, 0]), c1),
            (MultiIndex::new(vec![1, 1]), c2),
            (MultiIndex::new(vec![1, 2]), c3),
        ];
        let f = HermiteExpansion::from_coefficients(2, 3, coeffs, 0.0).unwrap();
        let norm = f.l2_norm_sq();
        for rho in [0.5, 0.25, 0.125, 0.0625] {
            let c = DMatrix::identity(2, 2) * rho;
            let v = cross_expectation(&f, &f, &c).unwrap();
            prop_assert!(v.abs() / (rho * rho) <= 4.0 * norm + 1e-12);
        }
    }
}
