mod common;

use gauss_subord::gaussian_model::{CovarianceModel, StationaryModel};
use gauss_subord::hermite::{HermiteExpansion, MultiIndex};
use gauss_subord::moment_bounds::*;
use gauss_subord::wick_diagrams::{enumerate_diagrams, Diagram, DiagramTable};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn h(k: u32) -> HermiteExpansion {
    HermiteExpansion::monomial(MultiIndex::scalar(k), 1.0, k as usize).unwrap()
}

/// Uniform random pairing of the table points, retried until no edge lies in a row.
fn random_diagram(lens: &[u32], rng: &mut ChaCha20Rng) -> Option<Diagram> {
    let t = DiagramTable::scalar(lens);
    let mut pts: Vec<usize> = (0..t.total_points()).collect();
    for _ in 0..200 {
        pts.shuffle(rng);
        let edges: Vec<(usize, usize)> = pts.chunks(2).map(|c| (c[0], c[1])).collect();
        if let Ok(d) = Diagram::from_edges(&t, edges) {
            return Some(d);
        }
    }
    None
}

#[test]
fn fourth_moment_matches_isserlis() {
    let model = StationaryModel::geometric(0.5);
    let n = 4;
    let rep = fourth_moment_bound(&model, &h(2), n, 14).unwrap();
    let mut direct = 0.0;
    for t in 0..n.pow(4) {
        let ts = [t % n, (t / n) % n, (t / n / n) % n, t / n / n / n];
        direct += common::isserlis_hermite_moment(&[vec![2], vec![2], vec![2], vec![2]], |u, v, _, _| {
            model.cross_cov(n, ts[u], ts[v], 0, 0)
        });
    }
    assert!((rep.m_n - direct).abs() < 1e-9 * direct, "{} {direct}", rep.m_n);
    assert_eq!(rep.terms.iter().map(|t| t.multiplicity).sum::<usize>(), 15);
}

#[test]
fn linear_fourth_moment_is_three_s4() {
    let model = StationaryModel::geometric(0.3);
    let n = 6;
    let s2: f64 = (0..n).flat_map(|t| (0..n).map(move |s| (t, s))).map(|(t, s)| model.cross_cov(n, t, s, 0, 0)).sum();
    let rep = fourth_moment_bound(&model, &h(1), n, 14).unwrap();
    assert!((rep.m_n - 3.0 * s2 * s2).abs() < 1e-9 * s2 * s2);
}

#[test]
fn ratio_scan_flags_misdeclared_rank() {
    let model = StationaryModel::geometric(0.8);
    let n_list: Vec<usize> = (4..=12).collect();
    let ok = BoundInstance::new(&model, vec![h(2), h(2)], 2, 2);
    let r = ratio_scan(&ok, &n_list, 1.05).unwrap();
    assert!(r.bounded && r.rank_certified.iter().all(|&c| c));
    // H_1 declared as rank 2
    let bad = BoundInstance::new(&model, vec![h(1), h(1)], 2, 2);
    let r = ratio_scan(&bad, &n_list, 1.05).unwrap();
    assert!(!r.rank_certified[0]);
    assert!(!r.bounded);
}

#[test]
fn holder_bound_on_every_connected_diagram() {
    let model = StationaryModel::geometric(0.6);
    let lens = [2u32, 2, 2];
    let t = DiagramTable::scalar(&lens);
    let l: Vec<usize> = lens.iter().map(|&x| x as usize).collect();
    for d in enumerate_diagrams(&t).unwrap() {
        let hq = holder_quantities(&d, &l, &model, 6, None).unwrap();
        let i = diagram_index_sum(&d, &model, 6).unwrap();
        let prod: f64 = (0..3).flat_map(|u| (u + 1..3).map(move |v| (u, v))).map(|(u, v)| hq.r[u][v]).product();
        assert!(i <= prod + 1e-10);
    }
}

#[test]
fn split_identity_on_random_diagrams() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 200 {
        let p = rand::Rng::random_range(&mut rng, 2..=5);
        let lens: Vec<u32> = (0..p).map(|_| rand::Rng::random_range(&mut rng, 1..=4)).collect();
        if lens.iter().sum::<u32>() % 2 == 1 {
            continue;
        }
        let Some(d) = random_diagram(&lens, &mut rng) else { continue };
        let l: Vec<usize> = lens.iter().map(|&x| x as usize).collect();
        let splits = subset_splits(&d, &l).unwrap();
        assert_eq!(splits.len(), (1 << p) - 1);
        for s in &splits {
            assert_eq!(s.l + s.l_star, Ratio::from_integer(s.rows.len() as i64));
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trend_detector_is_scale_free(xs in prop::collection::vec(0.01f64..10.0, 2..12), c in 0.1f64..10.0) {
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        prop_assert_eq!(no_upward_trend(&xs, 1.05), no_upward_trend(&scaled, 1.05));
    }

    #[test]
    fn rhs_is_monotone_in_q(k in 0.1f64..3.0, n in 2usize..20, q1 in 0.0f64..5.0, dq in 0.0f64..5.0) {
        prop_assert!(bound_rhs(k, n, 3, 2, q1) <= bound_rhs(k, n, 3, 2, q1 + dq) + 1e-12);
    }
}
