mod common;

use gauss_subord::hermite::*;
use proptest::prelude::*;

#[test]
fn polynomial_expansions_are_exact() {
    let quad = QuadSpec::default();
    // x^3 = H_3 + 3 H_1, so J(1) = 3 and J(3) = 6
    let e = build_expansion(|x| x[0].powi(3), 1, 5, &quad).unwrap();
    assert!((e.coefficient(&MultiIndex::scalar(1)) - 3.0).abs() < 1e-10);
    assert!((e.coefficient(&MultiIndex::scalar(3)) - 6.0).abs() < 1e-10);
    assert!(e.coefficient(&MultiIndex::scalar(2)).abs() < 1e-10);
    assert!(e.residual().abs() < 1e-9);
    assert_eq!(hermite_rank(&e, RANK_TOLERANCE).rank, Some(1));

    // x y - 1: one level-2 coefficient and the constant
    let e = build_expansion(|x| x[0] * x[1] - 1.0, 2, 3, &quad).unwrap();
    assert!((e.coefficient(&MultiIndex::new(vec![1, 1])) - 1.0).abs() < 1e-10);
    assert!((e.mean() + 1.0).abs() < 1e-10);
    assert_eq!(hermite_rank(&e.centered(), RANK_TOLERANCE).rank, Some(2));
}

#[test]
fn exponential_coefficients() {
    // E e^{tX} He_k(X) = t^k e^{t^2/2}
    let t: f64 = 0.4;
    let e = build_expansion(|x| (t * x[0]).exp(), 1, 10, &QuadSpec::default()).unwrap();
    for k in 0..=10u32 {
        let want = t.powi(k as i32) * (t * t / 2.0).exp();
        assert!((e.coefficient(&MultiIndex::scalar(k)) - want).abs() < 1e-10, "{k}");
    }
    // E e^{2tX} = e^{2 t^2}
    let full = (2.0 * t * t).exp();
    assert!((e.full_norm_sq() - full).abs() < 1e-10);
    assert!(e.residual() > 0.0 && e.residual() < 1e-8);
}

#[test]
fn kinked_function_on_split_rule() {
    let quad = QuadSpec::PiecewiseLine {
        breakpoints: vec![0.0],
        nodes_per_segment: 40,
        half_width: 12.0,
    };
    let e = build_expansion(|x| x[0].abs(), 1, 6, &quad).unwrap();
    let sqrt_2_pi = (2.0 / std::f64::consts::PI).sqrt();
    assert!((e.mean() - sqrt_2_pi).abs() < 1e-12);
    // J(2) = E|X|(X^2 - 1) = sqrt(2/pi)
    assert!((e.coefficient(&MultiIndex::scalar(2)) - sqrt_2_pi).abs() < 1e-12);
    assert!(e.coefficient(&MultiIndex::scalar(1)).abs() < 1e-14);
    assert!(mc_cross_check(|x| x[0].abs(), &e, 20_000, 3, 4.5).is_empty());
}

#[test]
fn pullback_changes_rank() {
    // x1 x2 under a correlated law is not centered; after centering it keeps rank 2
    let sigma = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let quad = QuadSpec::TensorGaussHermite { nodes: 12 };
    let r = generalized_rank(|y| y[0] * y[1] - 0.5, &sigma, 4, &quad, RANK_TOLERANCE).unwrap();
    assert_eq!(r.rank, Some(2));
    let r = generalized_rank(|y| y[0] + y[1], &sigma, 4, &quad, RANK_TOLERANCE).unwrap();
    assert_eq!(r.rank, Some(1));
}

#[test]
fn polynomial_coefficients_agree_with_oracle() {
    for k in 0..12 {
        assert_eq!(poly::hermite_monomial_coefficients(k), common::he_coefficients(k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_monomials(k in 0usize..12, x in -4.0f64..4.0) {
        let c = common::he_coefficients(k);
        let direct: f64 = c.iter().enumerate().map(|(i, &a)| a as f64 * x.powi(i as i32)).sum();
        prop_assert!((hermite_poly(k, x) - direct).abs() < 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn expansion_reproduces_polynomial(
        coef in prop::collection::vec(-2.0f64..2.0, 5),
        x in -3.0f64..3.0,
    ) {
        let f = |y: &[f64]| coef.iter().enumerate().map(|(i, c)| c * y[0].powi(i as i32)).sum::<f64>();
        let e = build_expansion(f, 1, 4, &QuadSpec::default()).unwrap();
        prop_assert!((e.eval(&[x]) - f(&[x])).abs() < 1e-9);
        prop_assert!(e.residual().abs() < 1e-9);
    }

    #[test]
    fn product_linearization(a in 0u32..5, b in 0u32..5, x in -3.0f64..3.0) {
        let ea = HermiteExpansion::monomial(MultiIndex::scalar(a), 1.0, 4).unwrap();
        let eb = HermiteExpansion::monomial(MultiIndex::scalar(b), 1.0, 4).unwrap();
        let p = ea.product(&eb).unwrap();
        let want = hermite_poly(a as usize, x) * hermite_poly(b as usize, x);
        prop_assert!((p.eval(&[x]) - want).abs() < 1e-9 * want.abs().max(1.0));
    }
}
