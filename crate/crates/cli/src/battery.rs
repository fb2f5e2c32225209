//! The acceptance battery behind `verify-all`.

use std::collections::HashMap;

use geocount::density::{compare_transformation, ps_density_in, ps_density_shell};
use geocount::dynlab::{
    counting_suite, equidistribution_profile, flow_quotient, mixing_correlations, CountingSuite, ProbeBox,
};
use geocount::fuchsian::{
    build_spectrum, build_spectrum_with, enumerate_ball, inverse_letter, BallEnumeration, FuchsianError, Letter,
    SpectrumOptions, SpectrumTable, SurfaceModel,
};
use geocount::hypgeom::{busemann, dist, BoundaryPoint, DiskPoint, Isometry, PhasePoint};
use geocount::jacobi::{classifier_suite, riccati_subspaces, ConformalMetric, GeodesicState, DEFAULT_HORIZON};
use geocount::mme::{
    domain_area, liouville_measure, random_box, random_holonomy_config, verify_expansion, verify_holonomy,
    KnieperSampler, PhaseBox, PhaseSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::load_or_build;
use crate::config::RunConfig;
use crate::error::CliError;

pub const CRITERIA: [(u8, &str); 15] = [
    (1, "group_sanity"),
    (2, "enumeration_vs_brute_force"),
    (3, "conjugacy_cross_validation"),
    (4, "critical_exponent"),
    (5, "busemann_limit"),
    (6, "transformation_law"),
    (7, "knieper_vs_liouville"),
    (8, "conditional_laws"),
    (9, "mixing"),
    (10, "equidistribution"),
    (11, "window_counting_law"),
    (12, "headline_counting_law"),
    (13, "per_geodesic_crossings"),
    (14, "rank_dichotomy"),
    (15, "determinism"),
];

pub const PS_EXPONENT: f64 = 1.05;
pub const DENSITY_BINS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub detail: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {}  {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.summary
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub surface: String,
    pub seed: u64,
    pub profile: crate::config::Profile,
    pub tolerances: crate::config::Tolerances,
    pub criteria: Vec<CriterionResult>,
    pub failed: Vec<u8>,
}

/// Shared state: the surface plus lazily built ball, spectrum and boxes.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub surface: SurfaceModel,
    /// Use the on-disk spectrum cache.
    pub use_cache: bool,
    ball: Option<BallEnumeration>,
    table: Option<SpectrumTable>,
    boxes: Option<Vec<(PhaseBox, f64)>>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig, use_cache: bool) -> Result<Self, CliError> {
        Ok(Self { cfg, surface: cfg.load_surface()?, use_cache, ball: None, table: None, boxes: None })
    }

    fn seed(&self, id: u64) -> u64 {
        self.cfg.seed.wrapping_mul(1_000).wrapping_add(id)
    }

    fn ensure_ball(&mut self) -> Result<(), CliError> {
        if self.ball.is_none() {
            self.ball = Some(enumerate_ball(&self.surface, self.cfg.profile.ball_radius)?);
        }
        Ok(())
    }

    fn ball(&self) -> &BallEnumeration {
        self.ball.as_ref().expect("ball built")
    }

    pub fn ensure_table(&mut self) -> Result<(), CliError> {
        if self.table.is_none() {
            self.table = Some(if self.use_cache {
                load_or_build(&self.surface, self.cfg.radius, &self.cfg.cache_dir)?.0
            } else {
                build_spectrum(&self.surface, self.cfg.radius)?
            });
        }
        Ok(())
    }

    pub fn table(&self) -> &SpectrumTable {
        self.table.as_ref().expect("table built")
    }

    /// Boxes for equidistribution and crossings, with Liouville measures.
    fn ensure_boxes(&mut self) {
        if self.boxes.is_none() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed(10));
            let n = self.cfg.profile.equidistribution_boxes;
            let boxes: Vec<PhaseBox> =
                (0..n).map(|_| random_box(&self.surface, &mut rng, (0.6, 0.9), (0.5, 0.9))).collect();
            let samples = self.cfg.samples as usize;
            let seed = self.seed(110);
            self.boxes = Some(
                boxes
                    .into_iter()
                    .enumerate()
                    .map(|(i, b)| (b, liouville_measure(&self.surface, &b, samples, seed + i as u64).value))
                    .collect(),
            );
        }
    }

    fn boxes(&self) -> &[(PhaseBox, f64)] {
        self.boxes.as_deref().expect("boxes built")
    }
}

fn result(id: u8, pass: bool, summary: String, detail: Value) -> CriterionResult {
    let name = CRITERIA[id as usize - 1].1;
    CriterionResult { id, name, pass, summary, detail }
}

fn c1_group(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let s = &ctx.surface;
    let tol = &ctx.cfg.tolerances;
    let r = s.eval(&s.relator);
    let closure = (r.a() - 1.0).norm().min((r.a() + 1.0).norm()) + r.b().norm();
    let target = 2.0 * (1.0 + 2f64.sqrt()).acosh();
    let mut worst: f64 = 0.0;
    let mut hyperbolic = true;
    for g in &s.generators {
        match g.trace_class().ok().and_then(|c| c.translation_length()) {
            Some(l) => worst = worst.max((l - target).abs()),
            None => hyperbolic = false,
        }
    }
    let pass = closure < tol.relator_closure && hyperbolic && worst < tol.systole && s.generators.len() == 8;
    Ok(result(
        1,
        pass,
        format!("relator closure {closure:.2e}; max |l - {target:.6}| = {worst:.2e}"),
        json!({ "closure": closure, "systole": target, "max_length_error": worst, "letters": s.generators.len() }),
    ))
}

fn element_key(m: &Isometry) -> [i64; 4] {
    let mut v = [m.a().re, m.a().im, m.b().re, m.b().im];
    let lead = v.iter().copied().find(|x| x.abs() > 1e-6).unwrap_or(1.0);
    if lead < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v.map(|x| (x * 1e5).round() as i64)
}

fn brute_force(
    s: &SurfaceModel,
    m: Isometry,
    last: Option<Letter>,
    left: usize,
    r: f64,
    out: &mut HashMap<[i64; 4], f64>,
) {
    let d = m.displacement();
    if d <= r {
        out.insert(element_key(&m), d);
    }
    if left == 0 {
        return;
    }
    for l in 0..s.letter_count() as Letter {
        if Some(inverse_letter(l)) != last {
            brute_force(s, m * s.generators[l as usize], Some(l), left - 1, r, out);
        }
    }
}

fn c2_enumeration(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let s = &ctx.surface;
    let (r, words) = (ctx.cfg.profile.brute_force_radius, ctx.cfg.profile.brute_force_words);
    let ball = enumerate_ball(s, r)?;
    let mut brute = HashMap::new();
    brute_force(s, Isometry::identity(), None, words, r, &mut brute);
    let mut mine = HashMap::new();
    let mut duplicates = 0;
    for m in ball.matrices() {
        if mine.insert(element_key(&m), ()).is_some() {
            duplicates += 1;
        }
    }
    let missing = brute.keys().filter(|k| !mine.contains_key(*k)).count();
    let extra = mine.keys().filter(|k| !brute.contains_key(*k)).count();
    let pass = duplicates == 0 && missing == 0 && extra == 0;
    Ok(result(
        2,
        pass,
        format!("R = {r}: {} elements, brute force {}, missing {missing}, extra {extra}", mine.len(), brute.len()),
        json!({ "radius": r, "word_length": words, "enumerated": mine.len(), "brute_force": brute.len(),
                "missing": missing, "extra": extra, "duplicates": duplicates }),
    ))
}

fn c3_cross_validation(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let len = ctx.cfg.profile.cross_validate;
    let opts = SpectrumOptions { cross_validate_up_to: len, ..SpectrumOptions::default() };
    let (pass, summary, detail) = match build_spectrum_with(&ctx.surface, len, &opts) {
        Ok(t) => (
            t.meta.cross_validated_up_to >= len,
            format!("{} classes up to length {len} agree", t.classes.len()),
            json!({ "length": len, "classes": t.classes.len(), "cross_validated_up_to": t.meta.cross_validated_up_to }),
        ),
        Err(FuchsianError::SpectrumInconsistency(m)) => {
            (false, format!("mismatch: {m}"), json!({ "length": len, "mismatch": m }))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(result(3, pass, summary, detail))
}

fn c4_exponent(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    ctx.ensure_ball()?;
    let hi = ctx.cfg.profile.ball_radius;
    let lo = hi - 4.0;
    let pts: Vec<(f64, f64)> =
        (0..=8).map(|k| lo + 0.5 * k as f64).map(|r| (r, (ctx.ball().count_within(r) as f64).ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let tol = &ctx.cfg.tolerances;
    Ok(result(
        4,
        (tol.growth_lo..=tol.growth_hi).contains(&slope),
        format!("slope of ln N(R) over [{lo}, {hi}] = {slope:.4}"),
        json!({ "r_lo": lo, "r_hi": hi, "slope": slope, "counts": pts.iter().map(|p| p.1.exp().round()).collect::<Vec<_>>() }),
    ))
}

fn random_disk_point(rng: &mut ChaCha8Rng, r_max: f64) -> DiskPoint {
    let rho = rng.gen_range(0.0..r_max);
    DiskPoint::polar(rho, rng.gen_range(0.0..std::f64::consts::TAU)).expect("inside the disk")
}

fn c5_busemann(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(5));
    let horizon = 20.0;
    let mut worst: f64 = 0.0;
    let n = ctx.cfg.profile.busemann_triples;
    for _ in 0..n {
        let (p, q) = (random_disk_point(&mut rng, 2.0), random_disk_point(&mut rng, 2.0));
        let xi = BoundaryPoint::from_angle(rng.gen_range(0.0..std::f64::consts::TAU));
        let x = DiskPoint::polar(horizon, xi.angle()).expect("inside the disk");
        let limit = dist(&q, &x) - dist(&p, &x);
        worst = worst.max((busemann(&p, &q, &xi) - limit).abs());
    }
    Ok(result(
        5,
        worst < ctx.cfg.tolerances.busemann,
        format!("{n} triples, max error {worst:.2e} at horizon {horizon}"),
        json!({ "triples": n, "horizon": horizon, "max_error": worst }),
    ))
}

fn c6_transformation(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    ctx.ensure_ball()?;
    let p = DiskPoint::origin();
    let q = DiskPoint::from_re_im(0.3, 0.0).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mp = ps_density_in(ctx.ball(), &p, PS_EXPONENT)?;
    let mq = ps_density_in(ctx.ball(), &q, PS_EXPONENT)?;
    let rep = compare_transformation(&mp, &mq, ctx.surface.entropy_h, DENSITY_BINS);
    Ok(result(
        6,
        rep.max_relative_deviation < ctx.cfg.tolerances.transformation && rep.bins_used > 0,
        format!(
            "R = {}, s = {PS_EXPONENT}: max deviation {:.4} on {} bins",
            ctx.cfg.profile.ball_radius, rep.max_relative_deviation, rep.bins_used
        ),
        json!({ "radius": ctx.cfg.profile.ball_radius, "s": PS_EXPONENT, "bins": DENSITY_BINS,
                "max_relative_deviation": rep.max_relative_deviation, "bins_used": rep.bins_used,
                "excluded": rep.excluded }),
    ))
}

fn c7_knieper(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    ctx.ensure_ball()?;
    let s = &ctx.surface;
    let prof = &ctx.cfg.profile;
    let n = ctx.cfg.samples as usize;
    let mu = ps_density_shell(ctx.ball(), &DiskPoint::origin(), PS_EXPONENT, prof.shell_inner)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(7));
    let boxes: Vec<PhaseBox> =
        (0..prof.knieper_boxes).map(|_| random_box(s, &mut rng, (0.4, 0.7), (0.6, 1.2))).collect();
    let sets: Vec<PhaseSet> = boxes.iter().map(|b| PhaseSet::Box(*b)).collect();
    let est = KnieperSampler::new(s, &mu)?.estimate(&sets, n, ctx.seed(17), 0);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (b, e)) in boxes.iter().zip(&est.estimates).enumerate() {
        let l = liouville_measure(s, b, n, ctx.seed(27) + i as u64);
        let rel = (e.value / l.value - 1.0).abs();
        worst = worst.max(rel);
        rows.push(json!({ "box": b, "knieper": e.value, "knieper_se": e.std_error, "liouville": l.value,
                          "liouville_se": l.std_error, "relative_deviation": rel }));
    }
    let area = domain_area(s, n, ctx.seed(37));
    let area_dev = (area.value / s.area() - 1.0).abs();
    let tol = &ctx.cfg.tolerances;
    Ok(result(
        7,
        worst < tol.knieper && area_dev < tol.area,
        format!("{} boxes, max relative deviation {worst:.4}; area deviation {area_dev:.4}", boxes.len()),
        json!({ "samples": n, "shell": [prof.shell_inner, prof.ball_radius], "boxes": rows,
                "discarded": est.discarded, "area": area.value, "area_deviation": area_dev }),
    ))
}

fn c8_conditionals(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    ctx.ensure_ball()?;
    let h = ctx.surface.entropy_h;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(8));
    let t_grid: Vec<f64> = (-5..=5).map(|k| 1.5 * k as f64).collect();
    let mut expansion: f64 = 0.0;
    for _ in 0..4 {
        let v = PhasePoint::new(random_disk_point(&mut rng, 1.5), rng.gen_range(0.0..std::f64::consts::TAU));
        for _ in 0..4 {
            let w = PhasePoint::new(random_disk_point(&mut rng, 1.5), rng.gen_range(0.0..std::f64::consts::TAU));
            expansion = expansion.max(verify_expansion(h, &v, &w, &t_grid).max_error);
        }
    }
    let mut holonomy: f64 = 0.0;
    let mut exact: f64 = 0.0;
    for _ in 0..ctx.cfg.profile.holonomy_configs {
        let cfg = random_holonomy_config(&mut rng, 0.6, 0.6);
        let rep = verify_holonomy(h, &cfg, |p| ps_density_in(ctx.ball(), p, PS_EXPONENT), DENSITY_BINS)?;
        holonomy = holonomy.max(rep.deviation);
        exact = exact.max(rep.busemann_deviation);
    }
    let tol = &ctx.cfg.tolerances;
    Ok(result(
        8,
        expansion < tol.expansion && holonomy < tol.holonomy,
        format!("expansion error {expansion:.2e}; holonomy deviation {holonomy:.4} (exact factors {exact:.1e})"),
        json!({ "expansion_max_error": expansion, "holonomy_max_deviation": holonomy,
                "holonomy_exact_factor_deviation": exact, "configs": ctx.cfg.profile.holonomy_configs }),
    ))
}

/// Fixed mixing pair: `B₂` is centred at the time-4 image of `B₁`'s centre.
pub fn mixing_boxes(s: &SurfaceModel) -> Result<(PhaseBox, PhaseBox), CliError> {
    let c1 = PhasePoint::new(DiskPoint::from_re_im(0.15, -0.1).map_err(|e| CliError::Numerical(e.to_string()))?, 0.7);
    let b1 = PhaseBox::new(c1, 0.75, 0.6)?;
    let b2 = PhaseBox::new(flow_quotient(s, &c1, 4.0)?, 0.75, 0.6)?;
    Ok((b1, b2))
}

fn c9_mixing(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let s = &ctx.surface;
    let n = ctx.cfg.samples as usize;
    let (b1, b2) = mixing_boxes(s)?;
    let m1 = liouville_measure(s, &b1, n, ctx.seed(9));
    let m2 = liouville_measure(s, &b2, n, ctx.seed(19));
    let prod = m1.value * m2.value;
    let prod_se = (m1.value.powi(2) * m2.std_error.powi(2) + m2.value.powi(2) * m1.std_error.powi(2)).sqrt();
    let t = ctx.cfg.t_max();
    let est = mixing_correlations(s, &b1, &b2, &[4.0, t], n, ctx.seed(29))?;
    let z = |k: usize| (est[k].value - prod).abs() / (est[k].std_error.powi(2) + prod_se.powi(2)).sqrt();
    let closer = (est[1].value - prod).abs() < (est[0].value - prod).abs();
    Ok(result(
        9,
        z(1) < ctx.cfg.tolerances.mixing_sigmas && closer,
        format!(
            "m1 m2 = {prod:.3e}; corr(4) = {:.3e} ({:.1} se), corr({t}) = {:.3e} ({:.1} se)",
            est[0].value,
            z(0),
            est[1].value,
            z(1)
        ),
        json!({ "m1": m1.value, "m2": m2.value, "product": prod, "product_se": prod_se, "t": [4.0, t],
                "correlation": [est[0].value, est[1].value], "std_error": [est[0].std_error, est[1].std_error] }),
    ))
}

fn c10_equidistribution(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    ctx.ensure_table()?;
    ctx.ensure_boxes();
    let (t_lo, t_hi) = (ctx.cfg.t_min(), ctx.cfg.t_max());
    let boxes: Vec<PhaseBox> = ctx.boxes().iter().map(|b| b.0).collect();
    let prof = equidistribution_profile(&ctx.surface, ctx.table(), &boxes, &ctx.cfg.t_grid, 0.05)?;
    let lo = ctx.cfg.t_grid.iter().position(|&t| t == t_lo).unwrap_or(0);
    let hi = ctx.cfg.t_grid.iter().position(|&t| t == t_hi).unwrap_or(0);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for ((b, m), mu) in ctx.boxes().iter().zip(&prof) {
        let err: Vec<f64> = mu.iter().map(|x| (x / m - 1.0).abs()).collect();
        pass &= err[hi] < ctx.cfg.tolerances.equidistribution && err[hi] < err[lo];
        worst = worst.max(err[hi]);
        rows.push(json!({ "box": b, "m": m, "mu_t": mu, "relative_error": err }));
    }
    Ok(result(
        10,
        pass,
        format!("{} boxes, max |mu_{t_hi}/m - 1| = {worst:.4}, each below its t = {t_lo} error", boxes.len()),
        json!({ "t": ctx.cfg.t_grid, "eps_sample": 0.05, "boxes": rows }),
    ))
}

/// Counting suite with the equidistribution box closest to `m = 0.03` as probe.
fn counting(ctx: &mut Context) -> Result<CountingSuite, CliError> {
    ctx.ensure_table()?;
    ctx.ensure_boxes();
    let (b, m) =
        *ctx.boxes().iter().min_by(|a, b| (a.1 - 0.03).abs().total_cmp(&(b.1 - 0.03).abs())).expect("at least one box");
    let probe = ProbeBox { phase_box: b, measure: m };
    Ok(counting_suite(&ctx.surface, ctx.table(), &ctx.cfg.t_grid, ctx.cfg.epsilon, Some(&probe))?)
}

fn law_rows(suite: &CountingSuite, law: &str) -> Vec<(f64, f64)> {
    suite.rows.iter().filter(|r| r.law == law).map(|r| (r.t, r.ratio)).collect()
}

fn c11_window(ctx: &mut Context, suite: &CountingSuite) -> CriterionResult {
    let rows = law_rows(suite, "window");
    let last = rows.last().map_or(f64::NAN, |r| r.1);
    let tol = &ctx.cfg.tolerances;
    let band = (tol.window_lo..=tol.window_hi).contains(&last);
    let ratios: Vec<String> = rows.iter().map(|r| format!("{}: {:.4}", r.0, r.1)).collect();
    result(
        11,
        band && suite.monotone_window,
        format!("ratios {}; band {}, monotone {}", ratios.join(", "), band, suite.monotone_window),
        json!({ "eps": ctx.cfg.epsilon, "ratios": rows, "in_band": band, "monotone": suite.monotone_window,
                "asym_compare": suite.window }),
    )
}

fn c12_headline(ctx: &mut Context, suite: &CountingSuite) -> Result<CriterionResult, CliError> {
    let rows = law_rows(suite, "cumulative");
    let n = rows.len();
    let last = rows[n - 1].1;
    let prev = if n >= 2 { rows[n - 2].1 } else { f64::NAN };
    let tol = &ctx.cfg.tolerances;
    let band = (tol.cumulative_lo..=tol.cumulative_hi).contains(&last);
    let closer = (last - 1.0).abs() < (prev - 1.0).abs();
    // Cross-check of the counts against the word-validated spectrum up to its length.
    let len = ctx.cfg.profile.cross_validate;
    let opts = SpectrumOptions { cross_validate_up_to: len, ..SpectrumOptions::default() };
    let small = build_spectrum_with(&ctx.surface, len, &opts)?;
    let h = ctx.surface.entropy_h;
    let mut check = Vec::new();
    let mut agree = true;
    let mut t = 4.0;
    while t <= len + 1e-9 {
        let (a, b) = (small.count_P(t)?, ctx.table().count_P(t)?);
        agree &= a == b;
        check.push(json!({ "t": t, "P_t": a, "ratio": a as f64 * h * t / (h * t).exp() }));
        t += 1.0;
    }
    let ratios: Vec<String> = rows.iter().map(|r| format!("{}: {:.4}", r.0, r.1)).collect();
    Ok(result(
        12,
        band && closer && agree,
        format!("ratios {}; band {band}, closer than previous t {closer}", ratios.join(", ")),
        json!({ "ratios": rows, "in_band": band, "closer_than_previous": closer, "validated_counts": check,
                "validated_counts_agree": agree, "monotone": suite.monotone_cumulative,
                "empirical_slope": suite.empirical_slope, "asym_compare": suite.cumulative }),
    ))
}

fn c13_crossings(ctx: &mut Context, suite: &CountingSuite) -> CriterionResult {
    let row = suite.rows.iter().rfind(|r| r.law == "crossings");
    let (pass, summary, detail) = match row {
        Some(r) => (
            (r.ratio - 1.0).abs() < ctx.cfg.tolerances.crossings,
            format!(
                "t = {}: mean crossings {:.4} vs m t / eps = {:.4} (ratio {:.4})",
                r.t, r.observed, r.predicted, r.ratio
            ),
            json!(r),
        ),
        None => (false, "no crossing rows".into(), Value::Null),
    };
    result(13, pass, summary, detail)
}

pub fn jacobi_suite(cases: usize, seed: u64, rank_tol: f64, gap_tol: f64) -> Result<Value, CliError> {
    let mut out = Vec::new();
    for m in ConformalMetric::presets() {
        let suite = classifier_suite(&m, cases, seed, DEFAULT_HORIZON, rank_tol, gap_tol)?;
        let rank_one = suite.cases.iter().filter(|c| c.rank == geocount::jacobi::Rank::RankOne).count();
        out.push(json!({ "preset": suite.preset, "cases": cases, "rank_one": rank_one,
                         "disagreements": suite.disagreements,
                         "max_curvature_on_grid": m.max_curvature_on_grid(61) }));
    }
    Ok(Value::Array(out))
}

fn c14_rank(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let tol = &ctx.cfg.tolerances;
    let suites = jacobi_suite(ctx.cfg.profile.jacobi_cases, ctx.seed(14), tol.rank, tol.gap)?;
    let disagreements: u64 =
        suites.as_array().into_iter().flatten().map(|s| s["disagreements"].as_u64().unwrap_or(1)).sum();
    let mut riccati: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(24));
    for _ in 0..5 {
        let s0 = GeodesicState::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let r = riccati_subspaces(&ConformalMetric::ConstantM1, &s0, DEFAULT_HORIZON, 0.01)?;
        riccati = riccati.max((r.u_unstable - 1.0).abs()).max((r.u_stable + 1.0).abs());
    }
    Ok(result(
        14,
        disagreements == 0 && riccati < tol.riccati,
        format!("{disagreements} disagreements over 4 presets; constant-curvature Riccati error {riccati:.2e}"),
        json!({ "suites": suites, "riccati_max_error": riccati }),
    ))
}

/// Randomized pieces of the battery at small sizes, run twice in-process.
fn c15_determinism(ctx: &mut Context) -> Result<CriterionResult, CliError> {
    let run = |ctx: &Context| -> Result<String, CliError> {
        let s = &ctx.surface;
        let ball = enumerate_ball(s, 9.0)?;
        let mu = ps_density_shell(&ball, &DiskPoint::origin(), PS_EXPONENT, 4.5)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(15));
        let b = random_box(s, &mut rng, (0.4, 0.7), (0.6, 1.2));
        let k = KnieperSampler::new(s, &mu)?.estimate(&[PhaseSet::Box(b)], 20_000, ctx.seed(15), 0);
        let (b1, b2) = mixing_boxes(s)?;
        let mix = mixing_correlations(s, &b1, &b2, &[4.0], 20_000, ctx.seed(15))?;
        let jac = jacobi_suite(5, ctx.seed(15), ctx.cfg.tolerances.rank, ctx.cfg.tolerances.gap)?;
        Ok(serde_json::to_string(&json!({ "knieper": k.estimates, "mixing": mix, "jacobi": jac }))?)
    };
    let (a, b) = (run(ctx)?, run(ctx)?);
    let digest = crate::sha256_hex(a.as_bytes());
    Ok(result(
        15,
        a == b,
        format!("two in-process runs {} (sha256 {})", if a == b { "identical" } else { "differ" }, &digest[..16]),
        json!({ "sha256": digest, "identical": a == b }),
    ))
}

/// Runs the selected criteria in order.
pub fn run(
    ctx: &mut Context,
    ids: &[u8],
    mut on_result: impl FnMut(&CriterionResult),
) -> Result<VerifyReport, CliError> {
    let mut out = Vec::new();
    let mut suite: Option<CountingSuite> = None;
    for &id in ids {
        let start = std::time::Instant::now();
        let r = match id {
            1 => c1_group(ctx)?,
            2 => c2_enumeration(ctx)?,
            3 => c3_cross_validation(ctx)?,
            4 => c4_exponent(ctx)?,
            5 => c5_busemann(ctx)?,
            6 => c6_transformation(ctx)?,
            7 => c7_knieper(ctx)?,
            8 => c8_conditionals(ctx)?,
            9 => c9_mixing(ctx)?,
            10 => c10_equidistribution(ctx)?,
            11..=13 => {
                if suite.is_none() {
                    suite = Some(counting(ctx)?);
                }
                let su = suite.as_ref().expect("suite built");
                match id {
                    11 => c11_window(ctx, su),
                    12 => c12_headline(ctx, su)?,
                    _ => c13_crossings(ctx, su),
                }
            }
            14 => c14_rank(ctx)?,
            15 => c15_determinism(ctx)?,
            _ => return Err(CliError::Config(format!("no criterion {id}"))),
        };
        eprintln!("criterion {id} took {:.1} s", start.elapsed().as_secs_f64());
        on_result(&r);
        out.push(r);
    }
    let failed = out.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    Ok(VerifyReport {
        surface: ctx.surface.name.clone(),
        seed: ctx.cfg.seed,
        profile: ctx.cfg.profile.clone(),
        tolerances: ctx.cfg.tolerances.clone(),
        criteria: out,
        failed,
    })
}
