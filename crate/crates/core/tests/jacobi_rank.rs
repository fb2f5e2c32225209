use geocount::jacobi::{
    classifier_suite, integrate_geodesic, random_start, rank_classify, riccati_subspaces, unstable_jacobi_profile,
    ConformalMetric, GeodesicState, Rank, DEFAULT_GAP_TOL, DEFAULT_HORIZON, DEFAULT_RANK_TOL,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn classifiers_agree_on_every_preset() {
    for m in ConformalMetric::presets() {
        let suite = classifier_suite(&m, 100, 5, DEFAULT_HORIZON, DEFAULT_RANK_TOL, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(suite.disagreements, 0, "{}", m.name());
        let ones = suite.cases.iter().filter(|c| c.rank == Rank::RankOne).count();
        match m {
            ConformalMetric::Flat => assert_eq!(ones, 0),
            ConformalMetric::FlatStrip { .. } => assert!(ones > 0 && ones < 100),
            _ => assert_eq!(ones, 100),
        }
    }
}

#[test]
fn flat_strip_examples() {
    let m = ConformalMetric::FlatStrip { half_width: 1.0 };
    let inside = GeodesicState::new(0.0f64, 0.0, std::f64::consts::FRAC_PI_2);
    assert_eq!(rank_classify(&m, &inside, 30.0, 1e-8).unwrap().rank, Rank::RankGe2);
    assert!(riccati_subspaces(&m, &inside, 30.0, 0.01).unwrap().gap < 1e-6);
    let crossing = GeodesicState::new(0.0f64, 0.0, 0.3);
    assert_eq!(rank_classify(&m, &crossing, 30.0, 1e-8).unwrap().rank, Rank::RankOne);
    assert!(riccati_subspaces(&m, &crossing, 30.0, 0.01).unwrap().gap > 1e-3);
    let k = rank_classify(&m, &crossing, 30.0, 1e-8).unwrap().sup_abs_k;
    let path = integrate_geodesic(&m, &crossing, 30.0, 0.01).unwrap();
    let oracle = path
        .states
        .iter()
        .map(|s| {
            let d = (s.x.abs() - 1.0).max(0.0);
            (-2.0 * d.powi(4)).exp() * 12.0 * d * d
        })
        .fold(0.0, f64::max);
    assert!(k >= oracle);
}

#[test]
fn unstable_jacobi_field_never_shrinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for m in ConformalMetric::presets() {
        for i in 0..10 {
            let s0 = random_start(&m, &mut rng, i);
            let prof = unstable_jacobi_profile(&m, &s0, 20.0, 0.01).unwrap();
            assert!(prof.windows(2).all(|w| w[1].1 >= w[0].1), "{} {s0:?}", m.name());
        }
    }
}

#[test]
fn speed_stays_unit_over_long_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in ConformalMetric::presets() {
        let s0 = random_start(&m, &mut rng, 1);
        let tr = integrate_geodesic(&m, &s0, 50.0, 0.01).unwrap();
        assert!(tr.max_speed_drift < 1e-6, "{} {}", m.name(), tr.max_speed_drift);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_then_back_returns(idx in 0usize..4, x in -1.0f64..1.0, y in 0.5f64..1.5, theta in 0.0f64..6.28, t in 1.0f64..20.0) {
        let m = ConformalMetric::presets()[idx];
        let s0 = GeodesicState::new(x, y, theta);
        let end = *integrate_geodesic(&m, &s0, t, 0.01).unwrap().states.last().unwrap();
        let back = *integrate_geodesic(&m, &end, -t, 0.01).unwrap().states.last().unwrap();
        prop_assert!((back.x - x).abs() < 1e-6 && (back.y - y).abs() < 1e-6, "{back:?}");
    }
}
