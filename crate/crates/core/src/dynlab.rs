//! Quotient dynamics and the counting experiments.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fuchsian::{FuchsianError, GeodesicClass, SpectrumTable, SurfaceModel};
use crate::hypgeom::hyperboloid::{frame, phase_at};
use crate::hypgeom::{DiskPoint, Isometry, PhasePoint};
use crate::mme::{MeasureEstimate, PhaseBox};

/// Longest single flow step before re-reducing to the fundamental domain.
pub const FLOW_CHUNK: f64 = 2.0;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.2;

#[derive(Debug, thiserror::Error)]
pub enum DynError {
    #[error(transparent)]
    Reduction(#[from] FuchsianError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("t = {t} is beyond the table cutoff {cutoff}")]
    OutOfRange { t: f64, cutoff: f64 },
    #[error("export failed: {0}")]
    Io(String),
}

/// Reduces `v` to the fundamental domain; returns the reduced vector and the
/// isometry `γ` with `γ·v` equal to it.
#[allow(non_snake_case)]
pub fn reduce_to_F(s: &SurfaceModel, v: &PhasePoint) -> Result<(PhasePoint, Isometry), DynError> {
    let (g, r) = s.domain.reduce_phase(v)?;
    Ok((r, g))
}

/// Geodesic flow on the quotient, re-reducing after every chunk.
pub fn flow_quotient(s: &SurfaceModel, v: &PhasePoint, t: f64) -> Result<PhasePoint, DynError> {
    let mut cur = *v;
    let mut left = t;
    while left.abs() > 0.0 {
        let dt = left.clamp(-FLOW_CHUNK, FLOW_CHUNK);
        let (p, w) = frame(&cur);
        cur = reduce_to_F(s, &phase_at(&p, &w, dt))?.0;
        left -= dt;
    }
    Ok(cur)
}

/// One period of a closed geodesic sampled at the midpoints of `n` equal segments.
#[derive(Debug, Clone)]
pub struct RealizedGeodesic {
    pub length: f64,
    pub step: f64,
    pub points: Vec<PhasePoint>,
}

impl RealizedGeodesic {
    /// Number of segments whose midpoint lies in `b`.
    pub fn crossings(&self, b: &PhaseBox) -> usize {
        self.points.iter().filter(|v| b.contains_reduced(v)).count()
    }

    pub fn arclength_in(&self, b: &PhaseBox) -> f64 {
        self.crossings(b) as f64 * self.step
    }
}

/// Walks the axis of `class` for one period in `⌈ℓ/ε⌉` equal steps of length
/// at most `eps`, starting from the foot of the axis nearest the origin.
pub fn realize_geodesic(s: &SurfaceModel, class: &GeodesicClass, eps: f64) -> Result<RealizedGeodesic, DynError> {
    if !(eps > 0.0) {
        return Err(DynError::Domain(format!("step {eps} must be positive")));
    }
    let len = class.length;
    let n = (len / eps).ceil().max(1.0) as usize;
    let step = len / n as f64;
    let foot = PhasePoint::on_geodesic(class.axis.1, class.axis.0);
    let (p, w) = frame(&foot);
    let mut cur = reduce_to_F(s, &phase_at(&p, &w, 0.5 * step))?.0;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(cur);
        let (p, w) = frame(&cur);
        cur = reduce_to_F(s, &phase_at(&p, &w, step))?.0;
    }
    Ok(RealizedGeodesic { length: len, step, points })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingRecord {
    pub word: String,
    pub t: f64,
    /// Per box: ε-segments of the orbit with midpoint in the box.
    pub counts: Vec<usize>,
}

pub fn crossing_record(
    s: &SurfaceModel,
    class: &GeodesicClass,
    boxes: &[PhaseBox],
    eps: f64,
) -> Result<CrossingRecord, DynError> {
    let g = realize_geodesic(s, class, eps)?;
    Ok(CrossingRecord {
        word: crate::fuchsian::format_word(&class.canonical_word),
        t: class.length,
        counts: boxes.iter().map(|b| g.crossings(b)).collect(),
    })
}

fn uniform_in_ball(rng: &mut ChaCha8Rng, to_c: &Isometry, r: f64) -> Complex64 {
    let u: f64 = rng.gen();
    let rho = (1.0 + u * (r.cosh() - 1.0)).acosh();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    to_c.map_z(Complex64::from_polar((rho / 2.0).tanh(), theta))
}

/// `m(B₁ ∩ g^{−t}B₂)` for every `t` in `ts` on one sample stream. Samples are
/// Liouville-uniform in the position ball × angle window of `B₁`; points outside
/// the fundamental domain count as misses.
pub fn mixing_correlations(
    s: &SurfaceModel,
    b1: &PhaseBox,
    b2: &PhaseBox,
    ts: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<MeasureEstimate>, DynError> {
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_c = Isometry::translation_to(b1.center.base);
    let mut hits = vec![0usize; ts.len()];
    for _ in 0..n_samples {
        let z = uniform_in_ball(&mut rng, &to_c, b1.position_radius);
        let a = b1.center.dir() + rng.gen_range(-b1.angle_halfwidth..b1.angle_halfwidth);
        if !s.domain.contains(z) {
            continue;
        }
        let v = PhasePoint::new(DiskPoint::new(z).map_err(FuchsianError::from)?, a);
        if !b1.contains_reduced(&v) {
            continue;
        }
        let mut cur = v;
        let mut now = 0.0;
        for &k in &order {
            cur = flow_quotient(s, &cur, ts[k] - now)?;
            now = ts[k];
            if b2.contains_reduced(&cur) {
                hits[k] += 1;
            }
        }
    }
    let ball = std::f64::consts::TAU * (b1.position_radius.cosh() - 1.0);
    let scale = ball * 2.0 * b1.angle_halfwidth / (std::f64::consts::TAU * s.area());
    let n = n_samples.max(1) as f64;
    Ok(hits
        .iter()
        .map(|&h| {
            let p = h as f64 / n;
            MeasureEstimate { value: scale * p, std_error: scale * (p * (1.0 - p) / n).sqrt(), samples: n_samples }
        })
        .collect())
}

pub fn mixing_correlation(
    s: &SurfaceModel,
    b1: &PhaseBox,
    b2: &PhaseBox,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MeasureEstimate, DynError> {
    Ok(mixing_correlations(s, b1, b2, &[t], n_samples, seed)?[0])
}

fn check_t(table: &SpectrumTable, t: f64) -> Result<(), DynError> {
    if t > table.cutoff() + 1e-12 {
        return Err(DynError::OutOfRange { t, cutoff: table.cutoff() });
    }
    Ok(())
}

/// `μ_t(B)` for every box and every `t`: the normalized arclength measure on
/// all classes of length ≤ t. Each class is realized once.
pub fn equidistribution_profile(
    s: &SurfaceModel,
    table: &SpectrumTable,
    boxes: &[PhaseBox],
    ts: &[f64],
    eps_sample: f64,
) -> Result<Vec<Vec<f64>>, DynError> {
    let t_max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check_t(table, t_max)?;
    let mut sums = vec![vec![0.0; ts.len()]; boxes.len()];
    let mut counts = vec![0usize; ts.len()];
    for c in table.classes.iter().filter(|c| c.length <= t_max) {
        let g = realize_geodesic(s, c, eps_sample)?;
        let fr: Vec<f64> = boxes.iter().map(|b| g.arclength_in(b) / g.length).collect();
        for (k, &t) in ts.iter().enumerate() {
            if c.length <= t {
                counts[k] += 1;
                for (i, f) in fr.iter().enumerate() {
                    sums[i][k] += f;
                }
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|row| row.iter().zip(&counts).map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 }).collect())
        .collect())
}

pub fn equidistribution_stat(
    s: &SurfaceModel,
    table: &SpectrumTable,
    b: &PhaseBox,
    t: f64,
    eps_sample: f64,
) -> Result<f64, DynError> {
    Ok(equidistribution_profile(s, table, std::slice::from_ref(b), &[t], eps_sample)?[0][0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCell {
    pub t: f64,
    pub eps: f64,
    pub f: f64,
    pub g: f64,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    /// The quantifier pattern this report instantiates on a finite grid.
    pub template: String,
    pub alpha: f64,
    pub cells: Vec<AsymptoticCell>,
    /// Minimal K ≥ 0 with `|ln f/g| < K·ε + α` at the largest t of every ε.
    pub k_fit: f64,
    /// The same fit restricted to each t of the grid.
    pub k_by_t: Vec<(f64, f64)>,
    /// `K·ε + α − |ln f/g|` at the largest t of every ε.
    pub margins: Vec<(f64, f64)>,
    pub pass: bool,
}

pub const ASYM_TEMPLATE: &str = "finite-grid surrogate of: for all alpha exists eps0 for all eps < eps0 exists t0 \
     for all t > t0, |ln f(t,eps)/g(t,eps)| < K eps + alpha; K fitted at the largest t of each eps, \
     pass iff K at the largest t does not exceed K at an earlier t";

fn k_needed(cells: &[&AsymptoticCell], alpha: f64) -> f64 {
    cells.iter().map(|c| ((c.log_ratio.abs() - alpha) / c.eps).max(0.0)).fold(0.0, f64::max)
}

/// Finite-grid instantiation of the `≅` relation; `f[i]`, `g[i]` are sampled at `grid[i] = (t, ε)`.
pub fn asym_compare(f: &[f64], g: &[f64], alpha: f64, grid: &[(f64, f64)]) -> Result<AsymptoticReport, DynError> {
    if grid.is_empty() || f.len() != grid.len() || g.len() != grid.len() {
        return Err(DynError::Domain("f, g and grid must be nonempty and of equal length".into()));
    }
    let mut cells = Vec::with_capacity(grid.len());
    for (&(t, eps), (&f, &g)) in grid.iter().zip(f.iter().zip(g)) {
        if !(f > 0.0 && g > 0.0) {
            return Err(DynError::Domain(format!("nonpositive sample at t = {t}, eps = {eps}")));
        }
        cells.push(AsymptoticCell { t, eps, f, g, log_ratio: (f / g).ln() });
    }
    let mut ts: Vec<f64> = cells.iter().map(|c| c.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut epss: Vec<f64> = cells.iter().map(|c| c.eps).collect();
    epss.sort_by(f64::total_cmp);
    epss.dedup();
    let last: Vec<&AsymptoticCell> =
        epss.iter().filter_map(|&e| cells.iter().filter(|c| c.eps == e).max_by(|a, b| a.t.total_cmp(&b.t))).collect();
    let k_fit = k_needed(&last, alpha);
    let k_by_t: Vec<(f64, f64)> =
        ts.iter().map(|&t| (t, k_needed(&cells.iter().filter(|c| c.t == t).collect::<Vec<_>>(), alpha))).collect();
    let margins = last.iter().map(|c| (c.eps, k_fit * c.eps + alpha - c.log_ratio.abs())).collect();
    let k_last = k_by_t.last().map_or(0.0, |x| x.1);
    let k_before = k_by_t[..k_by_t.len() - 1].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let pass = k_by_t.len() == 1 || k_last <= k_before + 1e-12;
    Ok(AsymptoticReport { template: ASYM_TEMPLATE.into(), alpha, cells, k_fit, k_by_t, margins, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingRow {
    pub law: String,
    pub t: f64,
    pub eps: f64,
    pub observed: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub std_error: f64,
    /// False below the systole, where the asymptotic law is not expected to apply.
    pub asymptotic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSuite {
    pub h: f64,
    pub rows: Vec<CountingRow>,
    pub window: AsymptoticReport,
    pub cumulative: AsymptoticReport,
    /// Least-squares slope of `ln(t·P_t)` over the grid.
    pub empirical_slope: f64,
    pub monotone_window: bool,
    pub monotone_cumulative: bool,
}

/// Box used for the implied `N(B, t)` and per-geodesic crossing rows.
#[derive(Debug, Clone, Copy)]
pub struct ProbeBox {
    pub phase_box: PhaseBox,
    pub measure: f64,
}

fn compare_samples(samples: &[(f64, f64, f64, f64)]) -> Result<AsymptoticReport, DynError> {
    let grid: Vec<(f64, f64)> = samples.iter().map(|x| (x.0, x.1)).collect();
    let f: Vec<f64> = samples.iter().map(|x| x.2).collect();
    let g: Vec<f64> = samples.iter().map(|x| x.3).collect();
    asym_compare(&f, &g, DEFAULT_ALPHA, &grid)
}

fn monotone(rows: &[&CountingRow]) -> bool {
    rows.windows(2).all(|w| (w[1].ratio - 1.0).abs() < (w[0].ratio - 1.0).abs())
}

pub fn counting_suite(
    s: &SurfaceModel,
    table: &SpectrumTable,
    t_grid: &[f64],
    eps: f64,
    probe: Option<&ProbeBox>,
) -> Result<CountingSuite, DynError> {
    let h = s.entropy_h;
    let t_max = t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    check_t(table, t_max + eps)?;
    let systole = table.systole().unwrap_or(f64::INFINITY);
    let err = |e: FuchsianError| DynError::from(e);
    let mut rows = Vec::new();
    let mut window_samples = Vec::new();
    let mut cumulative_samples = Vec::new();
    for &t in t_grid {
        let pt = table.count_P(t).map_err(err)? as f64;
        let pred = (h * t).exp() / (h * t);
        let asym = t >= systole && pt > 0.0;
        rows.push(CountingRow {
            law: "cumulative".into(),
            t,
            eps: 0.0,
            observed: pt,
            predicted: pred,
            ratio: pt / pred,
            std_error: pt.sqrt() / pred,
            asymptotic: asym,
        });
        if asym {
            cumulative_samples.push((t, eps, pt, pred));
        }
        for e in [eps / 4.0, eps / 2.0, eps] {
            let pw = table.count_window(t, e).map_err(err)? as f64;
            let pred = 2.0 * e * (h * t).exp() / t;
            if pw > 0.0 && t >= systole {
                window_samples.push((t, e, pw, pred));
            }
            if e != eps {
                continue;
            }
            rows.push(CountingRow {
                law: "window".into(),
                t,
                eps: e,
                observed: pw,
                predicted: pred,
                ratio: pw / pred,
                std_error: pw.sqrt() / pred,
                asymptotic: pw > 0.0 && t >= systole,
            });
            if let Some(pb) = probe {
                let n_obs = pw * t * pb.measure / e;
                let n_pred = 2.0 * (h * t).exp() * pb.measure;
                rows.push(CountingRow {
                    law: "implied_N".into(),
                    t,
                    eps: e,
                    observed: n_obs,
                    predicted: n_pred,
                    ratio: n_obs / n_pred,
                    std_error: pw.sqrt() * t * pb.measure / e / n_pred,
                    asymptotic: pw > 0.0 && t >= systole,
                });
                let mut counts = Vec::new();
                for c in table.classes.iter().filter(|c| c.length > t - e && c.length <= t + e) {
                    counts.push(realize_geodesic(s, c, e)?.crossings(&pb.phase_box) as f64);
                }
                let n = counts.len() as f64;
                let mean = if n > 0.0 { counts.iter().sum::<f64>() / n } else { 0.0 };
                let var =
                    if n > 1.0 { counts.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                let pred = pb.measure * t / e;
                rows.push(CountingRow {
                    law: "crossings".into(),
                    t,
                    eps: e,
                    observed: mean,
                    predicted: pred,
                    ratio: mean / pred,
                    std_error: (var / n.max(1.0)).sqrt() / pred,
                    asymptotic: n > 0.0,
                });
            }
        }
    }
    let fit: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.law == "cumulative" && r.asymptotic).map(|r| (r.t, (r.t * r.observed).ln())).collect();
    let empirical_slope = if fit.len() >= 2 {
        let n = fit.len() as f64;
        let mx = fit.iter().map(|p| p.0).sum::<f64>() / n;
        let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let pick = |law: &str| rows.iter().filter(|r| r.law == law && r.asymptotic).collect::<Vec<_>>();
    let monotone_window = monotone(&pick("window"));
    let monotone_cumulative = monotone(&pick("cumulative"));
    let empty = |law: &str| DynError::Domain(format!("no asymptotic {law} samples on the grid"));
    let window = if window_samples.is_empty() {
        return Err(empty("window"));
    } else {
        compare_samples(&window_samples)?
    };
    let cumulative = if cumulative_samples.is_empty() {
        return Err(empty("cumulative"));
    } else {
        compare_samples(&cumulative_samples)?
    };
    Ok(CountingSuite { h, rows, window, cumulative, empirical_slope, monotone_window, monotone_cumulative })
}

/// Writes `law,t,eps,observed,predicted,ratio,std_error` rows.
pub fn write_rows_csv(rows: &[CountingRow], path: &Path) -> Result<(), DynError> {
    let io = |e: csv::Error| DynError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["law", "t", "eps", "observed", "predicted", "ratio", "std_error"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.law.clone(),
            r.t.to_string(),
            r.eps.to_string(),
            r.observed.to_string(),
            r.predicted.to_string(),
            r.ratio.to_string(),
            r.std_error.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| DynError::Io(e.to_string()))
}
