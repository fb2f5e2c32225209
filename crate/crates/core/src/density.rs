//! Atomic Patterson–Sullivan densities built from orbit points of a ball
//! enumeration, with binned checks of the conformal and equivariance laws.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fuchsian::{enumerate_ball, BallEnumeration, FuchsianError, SurfaceModel};
use crate::hypgeom::{busemann, dist, BoundaryPoint, DiskPoint, Isometry};
use crate::scalar::wrap_angle;

/// Atoms closer than this to a bin edge are split between the two bins.
pub const EDGE_TOL: f64 = 1e-9;
/// Bins carrying less than this fraction of the total mass are left out of reports.
pub const NOISE_FLOOR: f64 = 0.01;
/// Default exponent factor: densities are built at `s = 1.05·h`.
pub const DEFAULT_S_FACTOR: f64 = 1.05;

#[derive(Debug, thiserror::Error)]
pub enum DensityError {
    #[error("degenerate measure: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Fuchsian(#[from] FuchsianError),
    #[error("export failed: {0}")]
    Io(String),
}

#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    pub basepoint: DiskPoint,
    /// Point from which orbit points are projected to the circle.
    pub viewpoint: DiskPoint,
    pub atoms: Vec<(BoundaryPoint, f64)>,
    pub exponent_s: f64,
    pub truncation_r: f64,
    /// Orbit points with `d(o, γo)` at most this radius are left out (0 keeps all but the identity).
    pub inner_r: f64,
}

#[inline]
fn orbit_point(m: &Isometry) -> Complex64 {
    m.b() / m.a().conj()
}

/// Boundary point hit by the ray from `p` through `x`.
fn direction_from(to_p: &Isometry, from_p: &Isometry, x: Complex64) -> Option<BoundaryPoint> {
    let y = from_p.map_z(x);
    let r = y.norm();
    if r < 1e-14 {
        return None;
    }
    Some(to_p.apply_boundary(&BoundaryPoint::normalized(y / r)))
}

/// Adds `w` at angle `theta` into `bins`, splitting atoms that sit on an edge.
fn deposit(bins: &mut [f64], theta: f64, w: f64) {
    let n = bins.len();
    let width = TAU / n as f64;
    let x = wrap_angle(theta) / width;
    let k = (x.floor() as usize).min(n - 1);
    let off = (x - k as f64) * width;
    if off < EDGE_TOL {
        bins[k] += 0.5 * w;
        bins[(k + n - 1) % n] += 0.5 * w;
    } else if width - off < EDGE_TOL {
        bins[k] += 0.5 * w;
        bins[(k + 1) % n] += 0.5 * w;
    } else {
        bins[k] += w;
    }
}

pub fn bin_center(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) * TAU / n as f64
}

impl BoundaryMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Masses of `n` uniform angular bins starting at angle 0.
    pub fn binned(&self, n: usize) -> Vec<f64> {
        let mut bins = vec![0.0; n];
        for (xi, w) in &self.atoms {
            deposit(&mut bins, xi.angle(), *w);
        }
        bins
    }

    /// Writes `bin_center_angle,mass` rows and a JSON sidecar with `p, s, R, bins`.
    pub fn export(&self, bins: usize, csv_path: &Path, json_path: &Path) -> Result<(), DensityError> {
        let io = |e: &dyn std::fmt::Display| DensityError::Io(e.to_string());
        let mut w = csv::Writer::from_path(csv_path).map_err(|e| io(&e))?;
        w.write_record(["bin_center_angle", "mass"]).map_err(|e| io(&e))?;
        for (i, m) in self.binned(bins).iter().enumerate() {
            w.write_record([bin_center(i, bins).to_string(), m.to_string()]).map_err(|e| io(&e))?;
        }
        w.flush().map_err(|e| io(&e))?;
        let meta = DensityMeta {
            p: [self.basepoint.z().re, self.basepoint.z().im],
            s: self.exponent_s,
            r: self.truncation_r,
            inner_r: self.inner_r,
            bins,
        };
        fs::write(json_path, serde_json::to_string_pretty(&meta).map_err(|e| io(&e))?).map_err(|e| io(&e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMeta {
    pub p: [f64; 2],
    pub s: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "inner_R", default, skip_serializing_if = "is_zero")]
    pub inner_r: f64,
    pub bins: usize,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// `Σ exp(−s·d(p, γo))` over ball elements with `d(o, γo) ≤ r`.
pub fn poincare_series_in(ball: &BallEnumeration, s: f64, p: &DiskPoint, r: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..ball.len() {
        if ball.displacement(i) <= r {
            let x = orbit_point(&ball.matrix(i));
            sum += (-s * dist(p, &DiskPoint::new(x).unwrap_or_else(|_| DiskPoint::origin()))).exp();
        }
    }
    sum
}

pub fn poincare_series(surf: &SurfaceModel, s: f64, p: &DiskPoint, r: f64) -> Result<f64, DensityError> {
    let ball = enumerate_ball(surf, r)?;
    Ok(poincare_series_in(&ball, s, p, r))
}

fn hyp_dist_z(p: Complex64, x: Complex64) -> f64 {
    let den = ((1.0 - p.norm_sqr()) * (1.0 - x.norm_sqr())).sqrt();
    2.0 * ((p - x).norm() / den).asinh()
}

/// Density from every non-identity element of `ball` (radius taken from the
/// ball). Each atom sits where the ray from the orbit base `o` through `γo`
/// meets the circle, with weight `exp(−s·d(p, γo))`.
pub fn ps_density_in(ball: &BallEnumeration, p: &DiskPoint, s: f64) -> Result<BoundaryMeasure, DensityError> {
    ps_density_viewed(ball, p, s, &DiskPoint::origin(), 0.0)
}

/// Shell density: only orbit points with `inner < d(o, γo) ≤ R` carry atoms.
/// Dropping the first shells removes the few heavy atoms that dominate at
/// desk-scale truncation; the normalized limit is unchanged.
pub fn ps_density_shell(
    ball: &BallEnumeration,
    p: &DiskPoint,
    s: f64,
    inner: f64,
) -> Result<BoundaryMeasure, DensityError> {
    ps_density_viewed(ball, p, s, &DiskPoint::origin(), inner)
}

/// As [`ps_density_shell`] with atoms projected from `viewpoint` instead of `o`.
pub fn ps_density_viewed(
    ball: &BallEnumeration,
    p: &DiskPoint,
    s: f64,
    viewpoint: &DiskPoint,
    inner: f64,
) -> Result<BoundaryMeasure, DensityError> {
    let to_v = Isometry::translation_to(*viewpoint);
    let from_v = to_v.inverse();
    let mut atoms = Vec::with_capacity(ball.len());
    for i in 0..ball.len() {
        if ball.displacement(i) < 1e-9 || ball.displacement(i) <= inner {
            continue;
        }
        let x = orbit_point(&ball.matrix(i));
        if let Some(xi) = direction_from(&to_v, &from_v, x) {
            atoms.push((xi, (-s * hyp_dist_z(p.z(), x)).exp()));
        }
    }
    if atoms.is_empty() {
        return Err(DensityError::Degenerate("ball holds no non-identity element".into()));
    }
    Ok(BoundaryMeasure {
        basepoint: *p,
        viewpoint: *viewpoint,
        atoms,
        exponent_s: s,
        truncation_r: ball.radius(),
        inner_r: inner,
    })
}

pub fn ps_density(surf: &SurfaceModel, p: &DiskPoint, s: f64, r: f64) -> Result<BoundaryMeasure, DensityError> {
    ps_density_in(&enumerate_ball(surf, r)?, p, s)
}

/// Slope of `ln N(r)` by least squares over `steps + 1` radii in `[r_lo, r_hi]`.
pub fn critical_exponent_estimate(ball: &BallEnumeration, r_lo: f64, r_hi: f64, steps: usize) -> f64 {
    let pts: Vec<(f64, f64)> = (0..=steps)
        .map(|k| r_lo + (r_hi - r_lo) * k as f64 / steps as f64)
        .map(|r| (r, (ball.count_within(r).max(1) as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformationReport {
    /// `mass_p / mass_q` per bin, `None` for bins below the noise floor.
    pub ratios: Vec<Option<f64>>,
    /// `exp(−h·b(q, p, centre))` per bin.
    pub expected: Vec<f64>,
    pub max_relative_deviation: f64,
    pub bins_used: usize,
    pub excluded: Vec<usize>,
}

/// Bin-wise comparison of two densities with the exponent `h` Radon–Nikodym law.
pub fn compare_transformation(mp: &BoundaryMeasure, mq: &BoundaryMeasure, h: f64, bins: usize) -> TransformationReport {
    let (bp, bq) = (mp.binned(bins), mq.binned(bins));
    let (tp, tq) = (mp.total_mass(), mq.total_mass());
    let mut ratios = Vec::with_capacity(bins);
    let mut expected = Vec::with_capacity(bins);
    let mut excluded = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..bins {
        let xi = BoundaryPoint::from_angle(bin_center(i, bins));
        let e = (-h * busemann(&mq.basepoint, &mp.basepoint, &xi)).exp();
        expected.push(e);
        if bp[i] < NOISE_FLOOR * tp || bq[i] < NOISE_FLOOR * tq {
            excluded.push(i);
            ratios.push(None);
            continue;
        }
        let r = bp[i] / bq[i];
        worst = worst.max((r / e - 1.0).abs());
        ratios.push(Some(r));
    }
    TransformationReport { ratios, expected, max_relative_deviation: worst, bins_used: bins - excluded.len(), excluded }
}

pub fn check_transformation(
    surf: &SurfaceModel,
    p: &DiskPoint,
    q: &DiskPoint,
    s: f64,
    r: f64,
    bins: usize,
) -> Result<TransformationReport, DensityError> {
    let ball = enumerate_ball(surf, r)?;
    let mp = ps_density_in(&ball, p, s)?;
    let mq = ps_density_in(&ball, q, s)?;
    Ok(compare_transformation(&mp, &mq, surf.entropy_h, bins))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivarianceReport {
    /// Max relative deviation of `μ_{γp}(γ·bin)` from `μ_p(bin)` on bins above the floor.
    pub max_deviation: f64,
    pub bins_used: usize,
    pub excluded: Vec<usize>,
    pub total_mass: f64,
    /// Total mass of `μ_{γp}` over the same ball as `μ_p` (image of the identity left out), without compensation.
    pub shifted_mass_uncompensated: f64,
    /// `|series(R) − series(R − d(o, γo))|` at `p`.
    pub truncation_bound: f64,
}

/// Compares `μ_{γp}` on `γ`-images of bins against `μ_p` on bins. The shifted
/// measure is the image construction: truncated on the ball of radius `r`
/// about `γo` (an enumeration to `r + d(o, γo)`) and projected from `γo`.
pub fn check_equivariance(
    surf: &SurfaceModel,
    gamma: &Isometry,
    p: &DiskPoint,
    s: f64,
    r: f64,
    bins: usize,
) -> Result<EquivarianceReport, DensityError> {
    let shift = gamma.displacement();
    let small = enumerate_ball(surf, r)?;
    let big = if shift < 1e-12 { None } else { Some(enumerate_ball(surf, r + shift)?) };
    let mp = ps_density_in(&small, p, s)?;
    let gp = gamma.apply(p).map_err(FuchsianError::from)?;
    let go = gamma.apply(&DiskPoint::origin()).map_err(FuchsianError::from)?;
    let to_go = Isometry::translation_to(go);
    let from_go = to_go.inverse();
    let g_inv = gamma.inverse();

    let mut pulled = vec![0.0; bins];
    let src = big.as_ref().unwrap_or(&small);
    for i in 0..src.len() {
        let m = src.matrix(i);
        let rel = g_inv * m;
        let d_rel = rel.displacement();
        if d_rel > r || d_rel < 1e-9 {
            continue;
        }
        let x = orbit_point(&m);
        if let Some(xi) = direction_from(&to_go, &from_go, x) {
            let w = (-s * hyp_dist_z(gp.z(), x)).exp();
            deposit(&mut pulled, g_inv.apply_boundary(&xi).angle(), w);
        }
    }
    let base = mp.binned(bins);
    let total = mp.total_mass();
    let mut excluded = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..bins {
        if base[i] < NOISE_FLOOR * total {
            excluded.push(i);
            continue;
        }
        worst = worst.max((pulled[i] / base[i] - 1.0).abs());
    }
    let uncompensated: f64 = (0..small.len())
        .map(|i| small.matrix(i))
        .filter(|m| (g_inv * *m).displacement() >= 1e-9)
        .map(|m| (-s * hyp_dist_z(gp.z(), orbit_point(&m))).exp())
        .sum();
    let bound = (poincare_series_in(&small, s, p, r) - poincare_series_in(&small, s, p, (r - shift).max(0.0))).abs();
    Ok(EquivarianceReport {
        max_deviation: worst,
        bins_used: bins - excluded.len(),
        excluded,
        total_mass: total,
        shifted_mass_uncompensated: uncompensated,
        truncation_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_trivial_cases() {
        let s = SurfaceModel::bolza();
        let p = DiskPoint::from_re_im(0.2, -0.1).unwrap();
        let v = poincare_series(&s, 1.0, &p, 0.0).unwrap();
        assert!((v - (-dist(&p, &DiskPoint::origin())).exp()).abs() < 1e-15);
        let ball = enumerate_ball(&s, 7.0).unwrap();
        assert_eq!(poincare_series_in(&ball, 0.0, &p, 7.0), ball.len() as f64);
    }

    #[test]
    fn edge_atoms_are_split() {
        let mut b = vec![0.0; 4];
        deposit(&mut b, 0.0, 1.0);
        deposit(&mut b, -1e-15, 1.0);
        deposit(&mut b, 1.0, 2.0);
        assert_eq!(b, vec![1.0 + 2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn mass_matches_series() {
        let s = SurfaceModel::bolza();
        let p = DiskPoint::from_re_im(0.1, 0.25).unwrap();
        let ball = enumerate_ball(&s, 8.0).unwrap();
        let m = ps_density_in(&ball, &p, 1.05).unwrap();
        let want = poincare_series_in(&ball, 1.05, &p, 8.0) - (-1.05 * dist(&p, &DiskPoint::origin())).exp();
        assert!((m.total_mass() - want).abs() < 1e-12 * want);
        assert!(m.atoms.iter().all(|a| a.1 > 0.0));
    }

    #[test]
    fn empty_ball_is_degenerate() {
        let s = SurfaceModel::bolza();
        let ball = enumerate_ball(&s, 1.0).unwrap();
        assert!(matches!(ps_density_in(&ball, &DiskPoint::origin(), 1.0), Err(DensityError::Degenerate(_))));
    }

    #[test]
    fn same_point_and_swap() {
        let s = SurfaceModel::bolza();
        let ball = enumerate_ball(&s, 9.0).unwrap();
        let p = DiskPoint::origin();
        let q = DiskPoint::from_re_im(0.3, 0.0).unwrap();
        let mp = ps_density_in(&ball, &p, 1.05).unwrap();
        let mq = ps_density_in(&ball, &q, 1.05).unwrap();
        let same = compare_transformation(&mp, &mp, 1.0, 32);
        assert_eq!(same.max_relative_deviation, 0.0);
        let fwd = compare_transformation(&mp, &mq, 1.0, 32);
        let back = compare_transformation(&mq, &mp, 1.0, 32);
        assert_eq!(fwd.excluded, back.excluded);
        for (a, b) in fwd.ratios.iter().zip(&back.ratios) {
            if let (Some(a), Some(b)) = (a, b) {
                assert!((a * b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mirror_and_rotation_symmetry() {
        let s = SurfaceModel::bolza();
        let ball = enumerate_ball(&s, 10.0).unwrap();
        let m = ps_density_in(&ball, &DiskPoint::origin(), 1.05).unwrap();
        let bins = m.binned(64);
        let total = m.total_mass();
        for i in 0..64 {
            assert!((bins[i] - bins[63 - i]).abs() < 1e-9 * total);
            assert!((bins[i] - bins[(i + 8) % 64]).abs() < 1e-9 * total);
        }
    }

    #[test]
    fn identity_equivariance_is_exact() {
        let s = SurfaceModel::bolza();
        let p = DiskPoint::from_re_im(-0.2, 0.1).unwrap();
        let rep = check_equivariance(&s, &Isometry::identity(), &p, 1.05, 8.0, 24).unwrap();
        assert!(rep.max_deviation < 1e-12);
        assert!((rep.shifted_mass_uncompensated - rep.total_mass).abs() < 1e-12 * rep.total_mass);
    }

    #[test]
    fn export_writes_bins_and_meta() {
        let s = SurfaceModel::bolza();
        let m = ps_density(&s, &DiskPoint::origin(), 1.05, 7.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (c, j) = (dir.path().join("d.csv"), dir.path().join("d.json"));
        m.export(16, &c, &j).unwrap();
        let text = fs::read_to_string(&c).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("bin_center_angle,mass"));
        let meta: DensityMeta = serde_json::from_str(&fs::read_to_string(&j).unwrap()).unwrap();
        assert_eq!(meta.bins, 16);
        assert_eq!(meta.r, 7.0);
    }
}
