use gauss_subord::applications::*;
use gauss_subord::gaussian_model::{CovarianceModel, StandardizedModel};
use gauss_subord::hermite::hermite_rank;
use gauss_subord::stats::{mean, variance};
use gauss_subord::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn smooth_locstat(j_max: usize) -> LocStatSpec {
    LocStatSpec::long_memory(Affine { c0: 1.0, c1: 0.5 }, Affine { c0: 0.1, c1: 0.1 }, 0.2, j_max, 2)
}

#[test]
fn degenerate_paths() {
    // dyadic steps keep the differences exactly zero
    let linear: Vec<f64> = (0..=20).map(|k| 0.75 * k as f64 / 16.0).collect();
    assert!(second_increments(&linear).iter().all(|d| d.abs() < 1e-15));
    let r = ir_statistic(&linear).unwrap();
    assert!(r.ratios.iter().all(|&x| x == 1.0));
    assert_eq!(r.value, 1.0);

    let n = 50.0;
    let quad: Vec<f64> = (0..=50).map(|k| (k as f64 / n).powi(2)).collect();
    for d in second_increments(&quad) {
        assert!((d - 2.0 / (n * n)).abs() < 1e-15);
    }

    // second increments alternate +1, -1
    let mut x = vec![0.0, 0.0];
    for k in 0..30 {
        let d = if k % 2 == 0 { 1.0 } else { -1.0 };
        let l = x.len();
        x.push(d + 2.0 * x[l - 1] - x[l - 2]);
    }
    assert_eq!(ir_statistic(&x).unwrap().value, 0.0);
    assert_eq!(ir_value(&x), 0.0);
    assert_eq!(ir_value(&linear), 1.0);
    assert!(ir_statistic(&[0.0, 1.0, 2.0]).is_err());
}

#[test]
fn brownian_second_increment_variance() {
    let p = PathSpec::fbm(0.5, 200);
    for k in [0, 17, 197] {
        assert!((p.second_increment_variance(k) - 2.0 / 200.0).abs() < 1e-14);
    }
}

#[test]
fn exact_paths() {
    let p = PathSpec::fbm(0.5, 64);
    let s = p.sampler().unwrap();
    assert_eq!(s.path(9), s.path(9));
    assert_eq!(s.path(9).len(), 65);
    assert_eq!(s.path(9)[0], 0.0);

    // lag-1 increment correlation for Brownian motion
    let corr: Vec<f64> = s.map_paths(100, 2000, |x| {
        let inc: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>() * 64.0 / 63.0
    });
    let se = (variance(&corr) / corr.len() as f64).sqrt();
    assert!(mean(&corr).abs() < 3.0 * se, "{} {}", mean(&corr), se);

    let end: Vec<f64> = PathSpec::fbm(0.7, 64)
        .sampler()
        .unwrap()
        .map_paths(5, 4000, |x| x[64] * x[64]);
    let se = (variance(&end) / end.len() as f64).sqrt();
    assert!((mean(&end) - 1.0).abs() < 3.0 * se);
}

#[test]
fn multifractional_covariance_reduces_to_fbm() {
    let c = PathSpec {
        hurst: HurstCurve::Linear { h0: 0.4, h1: 0.4 },
        n: 10,
    };
    let f = PathSpec::fbm(0.4, 10);
    for (s, t) in [(0.1, 0.7), (0.5, 0.5), (1.0, 0.3)] {
        assert!((c.covariance(s, t) - f.covariance(s, t)).abs() < 1e-14);
    }
    let m = PathSpec {
        hurst: HurstCurve::Linear { h0: 0.3, h1: 0.7 },
        n: 10,
    };
    assert!((m.covariance(0.6, 0.6) - 0.6f64.powf(2.0 * m.hurst.at(0.6))).abs() < 1e-14);
    assert!(m.sampler().is_ok());
}

#[test]
fn tangent_correlation_and_lambda() {
    assert!((rho2(0.5) + 0.5).abs() < 1e-15);
    assert!((lambda_of_rho(1.0) - 1.0).abs() < 1e-12);
    // independent coordinates: E|Z1 + Z2| / (|Z1| + |Z2|) in polar form
    let indep = lambda_of_rho(0.0);
    let oracle = {
        let m = 200_000;
        (0..m)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / m as f64;
                ir_ratio(th.cos(), th.sin())
            })
            .sum::<f64>()
            / m as f64
    };
    assert!((indep - oracle).abs() < 1e-9, "{indep} {oracle}");
    for h in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let l = lambda_of_H(h).unwrap();
        assert!(l > 0.0 && l < 1.0);
        let c = lambda_cross_check(h, 200_000, 11).unwrap();
        assert!(c.agrees);
    }
    let a = lambda_of_H(0.3).unwrap();
    let b = lambda_of_H(0.7).unwrap();
    let t = ir_target(&HurstCurve::Linear { h0: 0.3, h1: 0.7 }).unwrap();
    assert!(t > a && t < b);
}

#[test]
fn ir_pair_has_rank_two() {
    for h in [0.3, 0.5, 0.7] {
        let e = ir_pair_expansion(h, 6).unwrap();
        assert!(e.level_mass(0) < 1e-6 && e.level_mass(1) < 1e-6);
        assert!(e.level_mass(2) > 1e-3);
        assert_eq!(hermite_rank(&e, 1e-6).rank, Some(2));
    }
}

#[test]
fn ir_refuses_constant_statistic() {
    let p = PathSpec::fbm(0.5, 100);
    let err = ir_clt_from_values(&p, 1, &[1.0; 50], 0.6, None).unwrap_err();
    assert!(matches!(err, Error::ZeroVariance(_)));
}

#[test]
fn ir_mean_near_lambda() {
    let p = PathSpec::fbm(0.5, 600);
    let opts = IrOptions {
        with_sigma_limit: false,
        ..IrOptions::default()
    };
    let ex = ir_clt_experiment(&p, 200, 3, &opts).unwrap();
    assert!(ex.standardized_deviation.abs() < 3.0, "{ex:?}");
    let again = ir_clt_experiment(&p, 200, 3, &opts).unwrap();
    assert_eq!(ex.report.to_csv(), again.report.to_csv());
}

#[test]
fn white_locstat() {
    let spec = LocStatSpec::white(Affine::constant(1.0), 1);
    let a = simulate_locstat(&spec, 40, 4).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let eps: Vec<f64> = (0..40).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    assert_eq!(a, eps);
    assert_eq!(simulate_locstat(&spec, 40, 4).unwrap(), a);

    let g = spectral_density(&spec, 0.3, 16);
    for v in g {
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    let spec = LocStatSpec::white(Affine { c0: 1.0, c1: 1.0 }, 1);
    let n = 100;
    let sim = LocStatSimulator::new(&spec, n, 0, TAIL_ENERGY_TOLERANCE).unwrap();
    let draws: Vec<Vec<f64>> = (0..4000).map(|i| sim.sample(1000 + i)).collect();
    for tau in [0.25, 0.5, 0.75] {
        let t = (n as f64 * tau) as usize;
        let sq: Vec<f64> = draws.iter().map(|x| x[t - 1] * x[t - 1]).collect();
        let se = (variance(&sq) / sq.len() as f64).sqrt();
        let exact = (1.0 + t as f64 / n as f64).powi(2);
        assert!((mean(&sq) - exact).abs() < 3.0 * se, "{tau}: {} vs {exact}", mean(&sq));
    }
}

#[test]
fn locstat_covariance_matches_coefficients() {
    let spec = smooth_locstat(64);
    let model = LocStatModel::new(spec.clone()).unwrap();
    let n = 50;
    let brute = |t: usize, s: usize| -> f64 {
        // X_t = sum_j a(t/n, j) eps_{t-j}
        (0..=spec.j_max)
            .filter_map(|j| {
                let js = s as i64 - t as i64 + j as i64;
                (0..=spec.j_max as i64)
                    .contains(&js)
                    .then(|| spec.coefficient(t as f64 / n as f64, j) * spec.coefficient(s as f64 / n as f64, js as usize))
            })
            .sum()
    };
    for (t, s) in [(1, 1), (3, 10), (20, 7), (40, 40), (5, 80)] {
        assert!((model.time_cov(n, t, s) - brute(t, s)).abs() < 1e-12);
    }
    let b = model.cross_block(n, 3, 5);
    assert!((b[(1, 0)] - brute(5, 6)).abs() < 1e-12);

    // empirical covariance of the simulator at a pair of times
    let sim = LocStatSimulator::new(&spec, n, 1, 1.0).unwrap();
    let prods: Vec<f64> = (0..6000)
        .map(|i| {
            let x = sim.sample(i);
            x[9] * x[11]
        })
        .collect();
    let se = (variance(&prods) / prods.len() as f64).sqrt();
    assert!((mean(&prods) - brute(10, 12)).abs() < 3.0 * se);
}

#[test]
fn locstat_stationary_gap_is_zero() {
    let spec = LocStatSpec::long_memory(Affine::constant(1.0), Affine::constant(0.2), 0.2, 128, 3);
    let model = LocStatModel::new(spec).unwrap();
    assert!(model.is_stationary());
    let taus = [0.1, 0.5, 0.9];
    let c = locstat_covariances(&model, 100, &taus).unwrap();
    assert!(c.sup_gap < 1e-12);
}

#[test]
fn locstat_gap_decreases() {
    let model = LocStatModel::new(smooth_locstat(512)).unwrap();
    let taus: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
    let gaps: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| locstat_covariances(&model, n, &taus).unwrap().sup_gap)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(locstat_covariances(&model, 64, &taus).unwrap().g_min > 0.0);
}

#[test]
fn locstat_refuses_rank_condition() {
    let spec = LocStatSpec::long_memory(Affine::constant(1.0), Affine::constant(0.1), 0.4, 64, 1);
    let err = locstat_clt_experiment(&spec, WindowFunction::Linear, 1, 64, 10, 1, &LocStatOptions::default()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("m > 1/(1 - 2 alpha)"), "{msg}");
    assert!(msg.contains("m = 1") && msg.contains("5.0000"), "{msg}");
    assert!(check_rank_condition(2, 0.2).is_ok());
    assert!(check_rank_condition(2, 0.25).is_err());
}

/// `int_0^1 sum_d [c_tau(d)^2 + c_tau(d - 1) c_tau(d + 1)]`: Isserlis for
/// `y1 y2` with lag `d` between windows.
#[test]
fn locstat_product_variance_oracle() {
    let spec = smooth_locstat(48);
    let model = LocStatModel::new(spec.clone()).unwrap();
    let opts = LocStatOptions {
        tau_points: 17,
        ..LocStatOptions::default()
    };
    let family = tangent_family(&model, WindowFunction::Product, opts.tau_points).unwrap();
    let white = StandardizedModel::per_row(model.clone(), 64).unwrap();
    let sum_spec = gauss_subord::clt_harness::SubordinatedSumSpec::new(&white, family, 2).unwrap();
    let lim = gauss_subord::clt_harness::sigma_limit(&sum_spec, opts.tau_points, spec.j_max + 2, 1e-8).unwrap();

    let dmax = spec.j_max as i64 + 2;
    let integrand = |tau: f64| -> f64 {
        let c = |d: i64| model.frozen_cov(tau, d);
        (-dmax..=dmax).map(|d| c(d) * c(d) + c(d - 1) * c(d + 1)).sum()
    };
    let h = 1.0 / 16.0;
    let simpson: f64 = (0..=16)
        .map(|i| {
            let w = if i == 0 || i == 16 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * integrand(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((lim.value - simpson).abs() < 1e-9 * simpson, "{} {simpson}", lim.value);
    assert_eq!(lim.tail_bound, 0.0);
}

#[test]
fn locstat_experiment_runs() {
    let spec = smooth_locstat(256);
    let a = locstat_clt_experiment(&spec, WindowFunction::Square, 2, 256, 300, 2, &LocStatOptions::default()).unwrap();
    let b = locstat_clt_experiment(&spec, WindowFunction::Square, 2, 256, 300, 2, &LocStatOptions::default()).unwrap();
    assert_eq!(a.report.to_csv(), b.report.to_csv());
    let r = &a.report;
    assert!((r.empirical_variance - a.sigma_limit.value).abs() < 4.0 * r.variance_se + 0.1 * a.sigma_limit.value);
    assert!(a.g_min > 0.0 && a.continuity_modulus > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ir_ratio_in_unit_interval(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        let r = ir_ratio(a, b);
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn quadratic_form_identity(tau in 0.0f64..1.0, x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let spec = LocStatSpec::long_memory(Affine { c0: 1.0, c1: 0.5 }, Affine { c0: 0.2, c1: -0.1 }, 0.3, 40, 3);
        let model = LocStatModel::new(spec.clone()).unwrap();
        let s = model.tangent(tau, 0).unwrap();
        let v = nalgebra::DVector::from_vec(x.clone());
        let direct = (v.transpose() * &s * &v)[(0, 0)];
        let spectral = spectral_quadratic_form(&spec, tau, &x);
        prop_assert!((direct - spectral).abs() < 1e-6 * direct.abs().max(1.0));
    }
}
