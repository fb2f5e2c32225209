use std::collections::HashMap;

use geocount::fuchsian::{
    build_spectrum_with, enumerate_ball, inverse_letter, parse_word, Letter, SpectrumOptions, SurfaceModel,
};
use geocount::hypgeom::Isometry;

// Sign-normalized rounded entries: an independent key for PSU(1,1) elements.
fn key(m: &Isometry) -> [i64; 4] {
    let mut v = [m.a().re, m.a().im, m.b().re, m.b().im];
    let lead = v.iter().copied().find(|x| x.abs() > 1e-6).unwrap_or(1.0);
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v.map(|x| (x * 1e5).round() as i64)
}

fn brute_force(s: &SurfaceModel, max_len: usize, radius: f64, out: &mut HashMap<[i64; 4], f64>) {
    fn rec(s: &SurfaceModel, m: Isometry, last: Option<Letter>, left: usize, r: f64, out: &mut HashMap<[i64; 4], f64>) {
        let d = m.displacement();
        if d <= r {
            out.insert(key(&m), d);
        }
        if left == 0 {
            return;
        }
        for l in 0..s.letter_count() as Letter {
            if Some(inverse_letter(l)) == last {
                continue;
            }
            rec(s, m * s.generators[l as usize], Some(l), left - 1, r, out);
        }
    }
    rec(s, Isometry::identity(), None, max_len, radius, out);
}

#[test]
fn generators_close_and_are_systolic() {
    let s = SurfaceModel::bolza();
    let r = s.eval(&s.relator);
    assert!((r.a() - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-8 || (r.a() + 1.0).norm() < 1e-8);
    assert!(r.b().norm() < 1e-8);
    let target = 2.0 * (1.0 + 2f64.sqrt()).acosh();
    for g in &s.generators {
        let len = g.trace_class().unwrap().translation_length().unwrap();
        assert!((len - target).abs() < 1e-9);
    }
    assert!((target - 3.057142).abs() < 1e-6);
}

#[test]
fn ball_matches_exhaustive_words() {
    let s = SurfaceModel::bolza();
    let radius = 6.0;
    let ball = enumerate_ball(&s, radius).unwrap();
    let mut brute = HashMap::new();
    brute_force(&s, 8, radius, &mut brute);
    let mut mine = HashMap::new();
    for i in 0..ball.len() {
        let m = ball.matrix(i);
        assert!(mine.insert(key(&m), m.displacement()).is_none(), "duplicate element");
    }
    let near_edge = brute.values().filter(|d| (**d - radius).abs() < 1e-7).count();
    assert_eq!(near_edge, 0);
    assert_eq!(mine.len(), brute.len());
    for k in brute.keys() {
        assert!(mine.contains_key(k), "missing {k:?}");
    }
}

#[test]
fn ball_words_evaluate_to_matrices() {
    let s = SurfaceModel::bolza();
    let ball = enumerate_ball(&s, 8.0).unwrap();
    for i in (0..ball.len()).step_by(7) {
        let m = s.eval(&ball.word(i));
        assert_eq!(key(&m), key(&ball.matrix(i)));
    }
}

#[test]
fn growth_exponent_near_entropy() {
    let s = SurfaceModel::bolza();
    let ball = enumerate_ball(&s, 13.0).unwrap();
    let pts: Vec<(f64, f64)> =
        (0..=8).map(|k| 9.0 + 0.5 * k as f64).map(|r| (r, (ball.count_within(r) as f64).ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
}

#[test]
fn word_and_axis_classes_agree_to_eight() {
    let s = SurfaceModel::bolza();
    let opts = SpectrumOptions { cross_validate_up_to: 8.0, ..SpectrumOptions::default() };
    let t = build_spectrum_with(&s, 8.0, &opts).unwrap();
    assert_eq!(t.meta.cross_validated_up_to, 8.0);
    let prim = t.count_primitive(8.0).unwrap();
    let all = t.count_P(8.0).unwrap();
    assert!(prim < all);
    let w = parse_word("a").unwrap();
    assert!(t.classes.iter().any(|c| c.canonical_word == w));
}
