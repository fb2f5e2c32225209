//! Knieper's measure of maximal entropy on phase boxes, the Liouville oracle
//! and the stable/unstable conditional densities.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::density::{bin_center, BoundaryMeasure, DensityError};
use crate::fuchsian::{FuchsianError, SurfaceModel};
use crate::hypgeom::hyperboloid::{ball_interval, frame, from_disk, phase_at, Vec3};
use crate::hypgeom::{busemann, dist, endpoints, flow, BoundaryPoint, DiskPoint, Isometry, PhasePoint};
use crate::scalar::angle_distance;

/// Arclength step for membership tests along sampled geodesics.
pub const STEP: f64 = 0.01;
/// Pairs of atoms closer than this (radians) are treated as the diagonal.
pub const DIAGONAL_GAP: f64 = 1e-4;
/// Tolerance on endpoint and Busemann constraints in holonomy configurations.
pub const CONFIG_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum MmeError {
    #[error("invalid phase box: {0}")]
    InvalidBox(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Fuchsian(#[from] FuchsianError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseBox {
    #[serde(serialize_with = "ser_phase")]
    pub center: PhasePoint,
    pub position_radius: f64,
    pub angle_halfwidth: f64,
}

fn ser_phase<S: serde::Serializer>(v: &PhasePoint, s: S) -> Result<S::Ok, S::Error> {
    [v.base.z().re, v.base.z().im, v.dir()].serialize(s)
}

impl PhaseBox {
    pub fn new(center: PhasePoint, position_radius: f64, angle_halfwidth: f64) -> Result<Self, MmeError> {
        if !(position_radius > 0.0) {
            return Err(MmeError::InvalidBox(format!("position radius {position_radius} must be positive")));
        }
        if !(angle_halfwidth > 0.0 && angle_halfwidth <= std::f64::consts::PI) {
            return Err(MmeError::InvalidBox(format!("angle halfwidth {angle_halfwidth} outside (0, π]")));
        }
        Ok(Self { center, position_radius, angle_halfwidth })
    }

    /// Box containing the whole unit tangent bundle of the surface.
    pub fn full(s: &SurfaceModel) -> Self {
        let center = PhasePoint::new(DiskPoint::origin(), 0.0);
        Self { center, position_radius: s.domain.circumradius() + 1e-6, angle_halfwidth: std::f64::consts::PI + 1e-9 }
    }

    /// Membership of a vector already in the fundamental-domain chart.
    pub fn contains_reduced(&self, v: &PhasePoint) -> bool {
        dist(&v.base, &self.center.base) < self.position_radius
            && angle_distance(v.dir(), self.center.dir()) < self.angle_halfwidth
    }

    /// Membership after reducing `v` to the fundamental domain.
    pub fn contains(&self, s: &SurfaceModel, v: &PhasePoint) -> Result<bool, MmeError> {
        let (_, r) = s.domain.reduce_phase(v)?;
        Ok(self.contains_reduced(&r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Report written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureReport {
    #[serde(rename = "box")]
    pub phase_box: PhaseBox,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub discarded: usize,
    pub seed: u64,
}

/// Sets measured by the Knieper sampler.
#[derive(Debug, Clone)]
pub enum PhaseSet {
    Box(PhaseBox),
    /// Union of boxes.
    Union(Vec<PhaseBox>),
    /// The image `g^t(B)` in the quotient, tested by flowing back and reducing.
    Flowed(PhaseBox, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnieperEstimate {
    pub estimates: Vec<MeasureEstimate>,
    pub discarded: usize,
    pub diagonal: usize,
}

/// Monte Carlo evaluation of Knieper's boundary-pair formula on the lift of a
/// set to the fundamental domain, normalized by the same stream's estimate of
/// the whole unit tangent bundle.
pub struct KnieperSampler<'a> {
    surf: &'a SurfaceModel,
    density: &'a BoundaryMeasure,
    pick: WeightedIndex<f64>,
    h: f64,
}

fn merge(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> Option<(f64, f64)> {
    match (a, b) {
        (Some(x), Some(y)) => {
            let (lo, hi) = (x.0.max(y.0), x.1.min(y.1));
            (lo < hi).then_some((lo, hi))
        }
        _ => None,
    }
}

/// Length of `{t ∈ (lo, hi) : pred(t)}` by midpoint tests on a grid of step ≤ `STEP`.
fn stepped_length(lo: f64, hi: f64, mut pred: impl FnMut(f64) -> Option<bool>) -> Option<f64> {
    let len = hi - lo;
    if len <= 0.0 {
        return Some(0.0);
    }
    let n = (len / STEP).ceil().max(1.0) as usize;
    let dt = len / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        if pred(lo + (k as f64 + 0.5) * dt)? {
            acc += dt;
        }
    }
    Some(acc)
}

impl<'a> KnieperSampler<'a> {
    pub fn new(surf: &'a SurfaceModel, density: &'a BoundaryMeasure) -> Result<Self, MmeError> {
        let pick = WeightedIndex::new(density.atoms.iter().map(|a| a.1))
            .map_err(|e| DensityError::Degenerate(e.to_string()))?;
        Ok(Self { surf, density, pick, h: surf.entropy_h })
    }

    fn box_length(&self, b: &PhaseBox, p: &Vec3<f64>, w: &Vec3<f64>, f: (f64, f64)) -> f64 {
        let c = from_disk(b.center.base.z());
        let Some((lo, hi)) = merge(Some(f), ball_interval(p, w, &c, b.position_radius)) else {
            return 0.0;
        };
        if b.angle_halfwidth >= std::f64::consts::PI {
            return hi - lo;
        }
        stepped_length(lo, hi, |t| Some(b.contains_reduced(&phase_at(p, w, t)))).unwrap_or(0.0)
    }

    fn set_length(&self, set: &PhaseSet, p: &Vec3<f64>, w: &Vec3<f64>, f: (f64, f64)) -> Option<f64> {
        match set {
            PhaseSet::Box(b) => Some(self.box_length(b, p, w, f)),
            PhaseSet::Union(bs) => {
                let mut span: Option<(f64, f64)> = None;
                for b in bs {
                    let c = from_disk(b.center.base.z());
                    if let Some(iv) = merge(Some(f), ball_interval(p, w, &c, b.position_radius)) {
                        span = Some(span.map_or(iv, |s| (s.0.min(iv.0), s.1.max(iv.1))));
                    }
                }
                let Some((lo, hi)) = span else { return Some(0.0) };
                stepped_length(lo, hi, |t| {
                    let v = phase_at(p, w, t);
                    Some(bs.iter().any(|b| b.contains_reduced(&v)))
                })
            }
            PhaseSet::Flowed(b, shift) => stepped_length(f.0, f.1, |t| {
                let v = phase_at(p, w, t - shift);
                self.surf.domain.reduce_phase(&v).ok().map(|(_, r)| b.contains_reduced(&r))
            }),
        }
    }

    /// Estimates every set in `sets` on one sample stream seeded by `(seed, worker)`.
    pub fn estimate(&self, sets: &[PhaseSet], n_samples: usize, seed: u64, worker: u64) -> KnieperEstimate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(worker);
        let k = sets.len();
        let (mut sx, mut sxx, mut sxy) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        let (mut sy, mut syy) = (0.0, 0.0);
        let mut used = 0usize;
        let mut discarded = 0usize;
        let mut diagonal = 0usize;
        let p0 = self.density.basepoint;
        let to_p = Isometry::translation_to(p0);
        let from_p = to_p.inverse();
        let mut xs = vec![0.0; k];
        'outer: for _ in 0..n_samples {
            let xi = self.density.atoms[self.pick.sample(&mut rng)].0;
            let eta = self.density.atoms[self.pick.sample(&mut rng)].0;
            used += 1;
            if angle_distance(xi.angle(), eta.angle()) < DIAGONAL_GAP {
                diagonal += 1;
                continue;
            }
            let (fx, fe) = (from_p.apply_boundary(&xi), from_p.apply_boundary(&eta));
            let foot = to_p.apply_phase(&PhasePoint::on_geodesic(fe, fx)).unwrap_or(PhasePoint::on_geodesic(eta, xi));
            let weight = (-self.h * (busemann(&p0, &foot.base, &xi) + busemann(&p0, &foot.base, &eta))).exp();
            let (p, w) = frame(&foot);
            let Some(f) = self.surf.domain.interval(&p, &w) else { continue };
            let y = (f.1 - f.0) * weight;
            for (j, set) in sets.iter().enumerate() {
                match self.set_length(set, &p, &w, f) {
                    Some(l) => xs[j] = l * weight,
                    None => {
                        discarded += 1;
                        used -= 1;
                        continue 'outer;
                    }
                }
            }
            sy += y;
            syy += y * y;
            for j in 0..k {
                sx[j] += xs[j];
                sxx[j] += xs[j] * xs[j];
                sxy[j] += xs[j] * y;
            }
        }
        let n = used.max(2) as f64;
        let ybar = sy / n;
        let estimates = (0..k)
            .map(|j| {
                let r = if sy > 0.0 { sx[j] / sy } else { 0.0 };
                // Delta-method variance of the ratio of means.
                let s2 = (sxx[j] - 2.0 * r * sxy[j] + r * r * syy) / (n - 1.0);
                let se = if ybar > 0.0 { (s2.max(0.0) / n).sqrt() / ybar } else { 0.0 };
                MeasureEstimate { value: r, std_error: se, samples: used }
            })
            .collect();
        KnieperEstimate { estimates, discarded, diagonal }
    }
}

pub fn knieper_measure(
    s: &SurfaceModel,
    b: &PhaseBox,
    density: &BoundaryMeasure,
    n_samples: usize,
    seed: u64,
) -> Result<(MeasureEstimate, usize), MmeError> {
    let est = KnieperSampler::new(s, density)?.estimate(&[PhaseSet::Box(*b)], n_samples, seed, 0);
    Ok((est.estimates[0], est.discarded))
}

fn sample_in_ball(rng: &mut ChaCha8Rng, to_c: &Isometry, r: f64) -> Complex64 {
    let u: f64 = rng.gen();
    let rho = (1.0 + u * (r.cosh() - 1.0)).acosh();
    let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
    to_c.map_z(Complex64::from_polar((rho / 2.0).tanh(), theta))
}

/// Area of `ball(c, r) ∩ F`, sampled uniformly in the ball with the hyperbolic area element.
pub fn area_in_domain(s: &SurfaceModel, c: &DiskPoint, r: f64, n_samples: usize, seed: u64) -> MeasureEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_c = Isometry::translation_to(*c);
    let hits = (0..n_samples).filter(|_| s.domain.contains(sample_in_ball(&mut rng, &to_c, r))).count();
    let ball = std::f64::consts::TAU * (r.cosh() - 1.0);
    let n = n_samples.max(1) as f64;
    let f = hits as f64 / n;
    MeasureEstimate { value: f * ball, std_error: (f * (1.0 - f) / n).sqrt() * ball, samples: n_samples }
}

/// Rejection-sampled area of the fundamental domain.
pub fn domain_area(s: &SurfaceModel, n_samples: usize, seed: u64) -> MeasureEstimate {
    area_in_domain(s, &DiskPoint::origin(), s.domain.circumradius() * (1.0 + 1e-9), n_samples, seed)
}

/// Normalized Liouville measure of the box: area(ball ∩ F)·2α / (2π·area(F)).
pub fn liouville_measure(s: &SurfaceModel, b: &PhaseBox, n_samples: usize, seed: u64) -> MeasureEstimate {
    let a = area_in_domain(s, &b.center.base, b.position_radius, n_samples, seed);
    let scale = 2.0 * b.angle_halfwidth / (std::f64::consts::TAU * s.area());
    MeasureEstimate { value: a.value * scale, std_error: a.std_error * scale, samples: a.samples }
}

/// Box with centre uniform in F (hyperbolic area), uniform direction, and
/// radius and halfwidth uniform in the given ranges.
pub fn random_box(s: &SurfaceModel, rng: &mut impl Rng, radius: (f64, f64), halfwidth: (f64, f64)) -> PhaseBox {
    let r_f = s.domain.circumradius();
    let z = loop {
        let u: f64 = rng.gen();
        let rho = (1.0 + u * (r_f.cosh() - 1.0)).acosh();
        let z = Complex64::from_polar((rho / 2.0).tanh(), rng.gen::<f64>() * std::f64::consts::TAU);
        if s.domain.contains(z) {
            break z;
        }
    };
    let center = PhasePoint::new(DiskPoint::clamped(z), rng.gen::<f64>() * std::f64::consts::TAU);
    PhaseBox {
        center,
        position_radius: rng.gen_range(radius.0..=radius.1),
        angle_halfwidth: rng.gen_range(halfwidth.0..=halfwidth.1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionalKind {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalDensityQuery {
    pub v: PhasePoint,
    pub w: PhasePoint,
    pub kind: ConditionalKind,
}

/// `exp(−h·b(πv, πw, w_{±∞}))`: the density of the conditional against `dμ_{πv}`
/// at the relevant endpoint of `w`. The μ factor is left to [`mu_factor`].
pub fn conditional_density(h: f64, q: &ConditionalDensityQuery) -> f64 {
    let (fwd, back) = endpoints(&q.w);
    let xi = match q.kind {
        ConditionalKind::Unstable => fwd,
        ConditionalKind::Stable => back,
    };
    (-h * busemann(&q.v.base, &q.w.base, &xi)).exp()
}

/// Mass of `μ` in the bin (of `bins` uniform bins) containing `xi`.
pub fn mu_factor(mu: &BoundaryMeasure, xi: &BoundaryPoint, bins: usize) -> f64 {
    let m = mu.binned(bins);
    let width = std::f64::consts::TAU / bins as f64;
    let k = ((xi.angle() / width).floor() as usize).min(bins - 1);
    debug_assert!((bin_center(k, bins) - xi.angle()).abs() <= width);
    m[k]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub t: f64,
    pub unstable_log_ratio: f64,
    pub stable_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub rows: Vec<ExpansionRow>,
    /// Max of |ln ratio − h·t| (unstable) and |ln ratio + h·t| (stable).
    pub max_error: f64,
}

pub fn verify_expansion(h: f64, v: &PhasePoint, w: &PhasePoint, t_grid: &[f64]) -> ExpansionReport {
    let base_u = conditional_density(h, &ConditionalDensityQuery { v: *v, w: *w, kind: ConditionalKind::Unstable });
    let base_s = conditional_density(h, &ConditionalDensityQuery { v: *v, w: *w, kind: ConditionalKind::Stable });
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let wt = flow(w, t);
        let u = conditional_density(h, &ConditionalDensityQuery { v: *v, w: wt, kind: ConditionalKind::Unstable });
        let s = conditional_density(h, &ConditionalDensityQuery { v: *v, w: wt, kind: ConditionalKind::Stable });
        let (lu, ls) = ((u / base_u).ln(), (s / base_s).ln());
        worst = worst.max((lu - h * t).abs()).max((ls + h * t).abs());
        rows.push(ExpansionRow { t, unstable_log_ratio: lu, stable_log_ratio: ls });
    }
    ExpansionReport { rows, max_error: worst }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyConfig {
    pub v: PhasePoint,
    pub v2: PhasePoint,
    pub w: PhasePoint,
    pub w2: PhasePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyReport {
    /// Relative gap of the two sides with μ factors carried by the exact transformation law.
    pub busemann_deviation: f64,
    /// Relative gap with μ factors read from densities built at πv and πv′.
    pub deviation: f64,
    pub lhs: f64,
    pub rhs: f64,
}

fn boundary_gap(a: &BoundaryPoint, b: &BoundaryPoint) -> f64 {
    (a.u() - b.u()).norm()
}

impl HolonomyConfig {
    pub fn validate(&self) -> Result<(), MmeError> {
        let (wf, wb) = endpoints(&self.w);
        let (w2f, _) = endpoints(&self.w2);
        let (vf, vb) = endpoints(&self.v);
        let (v2f, _) = endpoints(&self.v2);
        let bad = |m: &str| Err(MmeError::InvalidConfiguration(m.into()));
        if boundary_gap(&wf, &w2f) > CONFIG_TOL || busemann(&self.w.base, &self.w2.base, &wf).abs() > CONFIG_TOL {
            return bad("w′ is not on the strong stable leaf of w");
        }
        if boundary_gap(&vf, &v2f) > CONFIG_TOL || busemann(&self.v.base, &self.v2.base, &vf).abs() > CONFIG_TOL {
            return bad("v′ is not on the strong stable leaf of v");
        }
        if boundary_gap(&wb, &vb) > CONFIG_TOL {
            return bad("w is not on the weak unstable set of v");
        }
        Ok(())
    }
}

/// Compares `dm^u_v(w)` with `dm^u_{v′}(w′)`. The densities at πv and πv′
/// come from `build` and are read on `bins` bins.
pub fn verify_holonomy(
    h: f64,
    cfg: &HolonomyConfig,
    build: impl Fn(&DiskPoint) -> Result<BoundaryMeasure, DensityError>,
    bins: usize,
) -> Result<HolonomyReport, MmeError> {
    cfg.validate()?;
    let xi = endpoints(&cfg.w).0;
    let o = DiskPoint::origin();
    let lhs_b =
        conditional_density(h, &ConditionalDensityQuery { v: cfg.v, w: cfg.w, kind: ConditionalKind::Unstable });
    let rhs_b =
        conditional_density(h, &ConditionalDensityQuery { v: cfg.v2, w: cfg.w2, kind: ConditionalKind::Unstable });
    let exact_l = lhs_b * (-h * busemann(&o, &cfg.v.base, &xi)).exp();
    let exact_r = rhs_b * (-h * busemann(&o, &cfg.v2.base, &xi)).exp();
    let mu_v = build(&cfg.v.base)?;
    let mu_v2 = build(&cfg.v2.base)?;
    let lhs = lhs_b * mu_factor(&mu_v, &xi, bins);
    let rhs = rhs_b * mu_factor(&mu_v2, &xi, bins);
    Ok(HolonomyReport {
        busemann_deviation: (exact_l / exact_r - 1.0).abs(),
        deviation: (lhs / rhs - 1.0).abs(),
        lhs,
        rhs,
    })
}

/// Unit vector at `z` pointing at the boundary point `xi`.
pub fn aimed_at(z: &DiskPoint, xi: &BoundaryPoint) -> PhasePoint {
    let u = Isometry::translation_to(*z).inverse().apply_boundary(xi);
    PhasePoint::new(*z, u.angle())
}

/// Point of the strong stable leaf of `v` (horocycle at `v_∞` through `πv`),
/// at horocyclic parameter `phi`, aimed at `v_∞`.
pub fn stable_leaf_point(v: &PhasePoint, phi: f64) -> PhasePoint {
    let z = Isometry::frame(v).map_z(Complex64::new(0.5, 0.0) - Complex64::from_polar(0.5, phi));
    aimed_at(&DiskPoint::clamped(z), &endpoints(v).0)
}

/// Random configuration satisfying the holonomy constraints: `v` with base
/// within `base_r` of `o`, `w` on the weak unstable set of `v`, and `v′`, `w′`
/// on the strong stable leaves of `v`, `w` with `|phi| ≤ spread`.
pub fn random_holonomy_config(rng: &mut impl Rng, base_r: f64, spread: f64) -> HolonomyConfig {
    let tau = std::f64::consts::TAU;
    let z = Complex64::from_polar((base_r / 2.0).tanh() * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * tau);
    let v = PhasePoint::new(DiskPoint::clamped(z), rng.gen::<f64>() * tau);
    let v2 = stable_leaf_point(&v, rng.gen_range(-spread..=spread));
    let back = endpoints(&v).1;
    let fwd = loop {
        let f = BoundaryPoint::from_angle(rng.gen::<f64>() * tau);
        if (f.u() - back.u()).norm() > 0.5 {
            break f;
        }
    };
    let w = flow(&PhasePoint::on_geodesic(back, fwd), rng.gen_range(-0.5..=0.5));
    let w2 = stable_leaf_point(&w, rng.gen_range(-spread..=spread));
    HolonomyConfig { v, v2, w, w2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ps_density_in;
    use crate::fuchsian::enumerate_ball;

    fn random_phase(rng: &mut ChaCha8Rng, r: f64) -> PhasePoint {
        let z = Complex64::from_polar(rng.gen::<f64>().sqrt() * r, rng.gen::<f64>() * std::f64::consts::TAU);
        PhasePoint::new(DiskPoint::new(z).unwrap(), rng.gen::<f64>() * std::f64::consts::TAU)
    }

    #[test]
    fn box_validation() {
        let c = PhasePoint::new(DiskPoint::origin(), 0.0);
        assert!(PhaseBox::new(c, 0.0, 1.0).is_err());
        assert!(PhaseBox::new(c, 0.3, 0.0).is_err());
        assert!(PhaseBox::new(c, 0.3, 4.0).is_err());
        assert!(PhaseBox::new(c, 0.3, std::f64::consts::PI).is_ok());
    }

    #[test]
    fn conditional_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let v = random_phase(&mut rng, 0.8);
            let w = random_phase(&mut rng, 0.8);
            let q = ConditionalDensityQuery { v, w: v, kind: ConditionalKind::Unstable };
            assert!((conditional_density(1.0, &q) - 1.0).abs() < 1e-14);
            let rep = verify_expansion(1.0, &v, &w, &[-3.0, -1.0, 0.0, 2.0, 5.0, 7.0]);
            assert!(rep.max_error < 1e-9, "{}", rep.max_error);
        }
    }

    #[test]
    fn liouville_product_form() {
        let s = SurfaceModel::bolza();
        let full = liouville_measure(&s, &PhaseBox::full(&s), 200_000, 1);
        assert!((full.value - 1.0).abs() < 3.0 * full.std_error + 1e-12);
        let c = PhasePoint::new(DiskPoint::from_re_im(0.1, 0.2).unwrap(), 1.0);
        let a = liouville_measure(&s, &PhaseBox::new(c, 0.4, 0.6).unwrap(), 100_000, 2);
        let b = liouville_measure(&s, &PhaseBox::new(c, 0.4, 0.3).unwrap(), 100_000, 2);
        assert!((a.value - 2.0 * b.value).abs() < 1e-12);
    }

    #[test]
    fn holonomy_by_flowing_cancels() {
        let s = SurfaceModel::bolza();
        let ball = enumerate_ball(&s, 8.0).unwrap();
        let v = PhasePoint::new(DiskPoint::from_re_im(0.1, -0.05).unwrap(), 0.7);
        let w = flow(&v, 0.4);
        let v2 = flow(&v, 0.0);
        let cfg = HolonomyConfig { v, v2, w, w2: w };
        let build = |p: &DiskPoint| ps_density_in(&ball, p, 1.05);
        let rep = verify_holonomy(1.0, &cfg, build, 48).unwrap();
        assert_eq!(rep.deviation, 0.0);
        let bad = HolonomyConfig { v, v2: flow(&v, 0.3), w, w2: w };
        assert!(matches!(verify_holonomy(1.0, &bad, build, 48), Err(MmeError::InvalidConfiguration(_))));
    }
}
