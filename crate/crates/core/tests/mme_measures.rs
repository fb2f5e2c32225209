use geocount::density::{ps_density_in, ps_density_shell};
use geocount::fuchsian::{enumerate_ball, SurfaceModel};
use geocount::hypgeom::{DiskPoint, PhasePoint};
use geocount::mme::{
    domain_area, liouville_measure, random_box, random_holonomy_config, verify_holonomy, KnieperSampler, PhaseBox,
    PhaseSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn knieper_tracks_liouville_and_is_additive() {
    let s = SurfaceModel::bolza();
    let ball = enumerate_ball(&s, 12.0).unwrap();
    let mu = ps_density_shell(&ball, &DiskPoint::origin(), 1.05, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let boxes: Vec<PhaseBox> = (0..4).map(|_| random_box(&s, &mut rng, (0.5, 0.7), (0.8, 1.2))).collect();
    let b1 = PhaseBox::new(PhasePoint::new(DiskPoint::from_re_im(0.3, 0.0).unwrap(), 0.0), 0.4, 0.7).unwrap();
    let b2 = PhaseBox::new(PhasePoint::new(DiskPoint::from_re_im(-0.3, 0.0).unwrap(), 2.0), 0.4, 0.7).unwrap();
    let mut sets: Vec<PhaseSet> = boxes.iter().map(|b| PhaseSet::Box(*b)).collect();
    sets.extend([
        PhaseSet::Box(b1),
        PhaseSet::Box(b2),
        PhaseSet::Union(vec![b1, b2]),
        PhaseSet::Box(PhaseBox::full(&s)),
    ]);
    let est = KnieperSampler::new(&s, &mu).unwrap().estimate(&sets, 200_000, 4, 0);
    assert_eq!(est.discarded, 0);
    for (b, e) in boxes.iter().zip(&est.estimates) {
        let l = liouville_measure(&s, b, 400_000, 9);
        let tol = 0.05 * l.value + 3.0 * (e.std_error.powi(2) + l.std_error.powi(2)).sqrt();
        assert!((e.value - l.value).abs() < tol, "{} vs {}", e.value, l.value);
    }
    let (m1, m2, mu12) = (est.estimates[4], est.estimates[5], est.estimates[6]);
    assert!((mu12.value - m1.value - m2.value).abs() < 3.0 * (m1.std_error + m2.std_error));
    assert!((est.estimates[7].value - 1.0).abs() < 1e-12);
}

#[test]
fn knieper_is_flow_invariant() {
    let s = SurfaceModel::bolza();
    let ball = enumerate_ball(&s, 11.0).unwrap();
    let mu = ps_density_shell(&ball, &DiskPoint::origin(), 1.05, 5.5).unwrap();
    let b = PhaseBox::new(PhasePoint::new(DiskPoint::from_re_im(0.1, 0.2).unwrap(), 0.5), 0.6, 1.0).unwrap();
    let sets = [PhaseSet::Box(b), PhaseSet::Flowed(b, 1.0), PhaseSet::Flowed(b, 3.0)];
    let est = KnieperSampler::new(&s, &mu).unwrap().estimate(&sets, 20_000, 8, 0);
    assert!(est.discarded * 1000 < 20_000);
    let m0 = est.estimates[0];
    for m in &est.estimates[1..] {
        let tol = 3.0 * (m0.std_error.powi(2) + m.std_error.powi(2)).sqrt();
        assert!((m.value - m0.value).abs() < tol, "{} vs {} ± {tol}", m.value, m0.value);
    }
}

#[test]
fn octagon_area_by_rejection() {
    let s = SurfaceModel::bolza();
    let a = domain_area(&s, 1_000_000, 17);
    assert!((a.value / (4.0 * std::f64::consts::PI) - 1.0).abs() < 0.005);
}

#[test]
fn holonomy_on_random_configurations() {
    let s = SurfaceModel::bolza();
    let ball = enumerate_ball(&s, 13.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let cfg = random_holonomy_config(&mut rng, 0.6, 0.6);
        let rep = verify_holonomy(1.0, &cfg, |p| ps_density_in(&ball, p, 1.05), 48).unwrap();
        assert!(rep.busemann_deviation < 1e-9);
        assert!(rep.deviation < 0.05, "{rep:?}");
    }
}
