use geocount::dynlab::{
    counting_suite, equidistribution_profile, flow_quotient, mixing_correlation, mixing_correlations, realize_geodesic,
    reduce_to_F, write_rows_csv, ProbeBox,
};
use geocount::fuchsian::{build_spectrum, GeodesicClass, SurfaceModel};
use geocount::hypgeom::{dist, DiskPoint, PhasePoint};
use geocount::mme::{liouville_measure, random_box, PhaseBox};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reduction_idempotent_on_many_points() {
    let s = SurfaceModel::bolza();
    let o = DiskPoint::origin();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100_000 {
        let z = Complex64::from_polar(rng.gen_range(0.0..0.999), rng.gen_range(0.0..std::f64::consts::TAU));
        let v = PhasePoint::new(DiskPoint::new(z).unwrap(), rng.gen_range(-3.0..3.0));
        let (r, _) = reduce_to_F(&s, &v).unwrap();
        let (r2, _) = reduce_to_F(&s, &r).unwrap();
        assert!((r2.base.z() - r.base.z()).norm() < 1e-10);
        assert!(dist(&r.base, &o) <= s.domain_diameter);
    }
}

#[test]
fn every_generator_class_closes_up() {
    let s = SurfaceModel::bolza();
    for l in 0..8u8 {
        let c = GeodesicClass::from_word(&s, vec![l], true, 0).unwrap();
        let g = realize_geodesic(&s, &c, 0.1).unwrap();
        let first = g.points[0];
        let back = flow_quotient(&s, &first, c.length).unwrap();
        assert!((back.base.z() - first.base.z()).norm() < 1e-6);
        assert!(g.points.iter().all(|v| s.domain.contains(v.base.z())));
    }
}

#[test]
fn mixing_against_the_product() {
    let s = SurfaceModel::bolza();
    let c1 = PhasePoint::new(DiskPoint::from_re_im(0.15, -0.1).unwrap(), 0.7);
    let b1 = PhaseBox::new(c1, 0.75, 0.6).unwrap();
    let b2 = PhaseBox::new(flow_quotient(&s, &c1, 4.0).unwrap(), 0.75, 0.6).unwrap();
    let m1 = liouville_measure(&s, &b1, 400_000, 1);
    let m2 = liouville_measure(&s, &b2, 400_000, 2);
    let prod = m1.value * m2.value;
    let est = mixing_correlations(&s, &b1, &b2, &[4.0, 12.0], 400_000, 7).unwrap();
    let z = |k: usize| (est[k].value - prod).abs() / est[k].std_error;
    assert!(z(1) < 3.0, "{est:?} {prod}");
    assert!((est[1].value - prod).abs() < (est[0].value - prod).abs());
    let full = mixing_correlation(&s, &b1, &PhaseBox::full(&s), 5.0, 200_000, 3).unwrap();
    assert!((full.value - m1.value).abs() < 3.0 * full.std_error.max(1e-12), "{full:?} {m1:?}");
}

#[test]
fn counting_and_equidistribution_at_twelve() {
    let s = SurfaceModel::bolza();
    let table = build_spectrum(&s, 12.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let boxes: Vec<PhaseBox> = (0..5).map(|_| random_box(&s, &mut rng, (0.6, 0.9), (0.5, 0.9))).collect();
    let ms: Vec<f64> = boxes.iter().map(|b| liouville_measure(&s, b, 400_000, 1).value).collect();
    let prof = equidistribution_profile(&s, &table, &boxes, &[8.0, 12.0], 0.05).unwrap();
    for (m, mu) in ms.iter().zip(&prof) {
        let e8 = (mu[0] / m - 1.0).abs();
        let e12 = (mu[1] / m - 1.0).abs();
        assert!(e12 < 0.2 && e12 < e8, "{m} {mu:?}");
    }
    let probe = ProbeBox { phase_box: boxes[2], measure: ms[2] };
    let suite = counting_suite(&s, &table, &[8.0, 10.0, 12.0], 0.5, Some(&probe)).unwrap();
    let row = |law: &str, t: f64| suite.rows.iter().find(|r| r.law == law && r.t == t).unwrap().ratio;
    assert!((0.8..=1.3).contains(&row("window", 12.0)));
    assert!((0.85..=1.25).contains(&row("cumulative", 12.0)));
    assert!((row("cumulative", 12.0) - 1.0).abs() < (row("cumulative", 10.0) - 1.0).abs());
    assert!((row("crossings", 12.0) - 1.0).abs() < 0.25);
    assert_eq!(row("implied_N", 12.0), row("window", 12.0));
    assert!((suite.empirical_slope - 1.0).abs() < 0.1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("counting.csv");
    write_rows_csv(&suite.rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("law,t,eps,observed,predicted,ratio,std_error"));
    assert_eq!(text.lines().count(), suite.rows.len() + 1);
}
