//! Geodesics, curvature and scalar Riccati solutions on conformal metrics
//! `e^{2φ}(dx² + dy²)` of nonpositive curvature.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::scalar::Real;

pub const DEFAULT_DT: f64 = 1e-2;
pub const DEFAULT_HORIZON: f64 = 30.0;
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_GAP_TOL: f64 = 1e-10;
pub const MAX_DT: f64 = 1e-2;
pub const DRIFT_LIMIT: f64 = 1e-4;
pub const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JacobiError {
    #[error("step {0} must lie in (0, 1e-2]")]
    InvalidStep(f64),
    #[error("unit-speed drift {drift} at s = {s}")]
    SpeedDrift { drift: f64, s: f64 },
    #[error("Riccati blow-up |u| = {u} at s = {s}")]
    Blowup { u: f64, s: f64 },
    #[error("({x}, {y}) is outside the chart of the metric")]
    OutOfChart { x: f64, y: f64 },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("export failed: {0}")]
    Io(String),
}

/// Conformal factor with its first and second partials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub phi: T,
    pub phi_x: T,
    pub phi_y: T,
    pub phi_xx: T,
    pub phi_yy: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ConformalMetric {
    /// `φ ≡ 0`.
    Flat,
    /// `φ = x² + y²`, so `K = −4e^{−2φ}`.
    StrictlyNegative,
    /// `φ = 0` for `|x| ≤ a`, `(|x| − a)⁴` outside.
    FlatStrip { half_width: f64 },
    /// Upper half-plane, `φ = −ln y`, `K ≡ −1`.
    ConstantM1,
}

impl ConformalMetric {
    pub const PRESET_NAMES: [&'static str; 4] = ["flat", "strictly_negative", "flat_strip", "constant_m1"];

    pub fn presets() -> [ConformalMetric; 4] {
        [Self::Flat, Self::StrictlyNegative, Self::FlatStrip { half_width: 1.0 }, Self::ConstantM1]
    }

    pub fn preset(name: &str) -> Result<Self, JacobiError> {
        Self::PRESET_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Self::presets()[i])
            .ok_or_else(|| JacobiError::UnknownPreset(name.into()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Flat => "flat",
            Self::StrictlyNegative => "strictly_negative",
            Self::FlatStrip { .. } => "flat_strip",
            Self::ConstantM1 => "constant_m1",
        }
    }

    pub fn in_chart<T: Real>(&self, _x: T, y: T) -> bool {
        !matches!(self, Self::ConstantM1) || y > T::zero()
    }

    pub fn jet<T: Real>(&self, x: T, y: T) -> Jet<T> {
        let z = T::zero();
        match *self {
            Self::Flat => Jet { phi: z, phi_x: z, phi_y: z, phi_xx: z, phi_yy: z },
            Self::StrictlyNegative => {
                let two = T::two();
                Jet { phi: x * x + y * y, phi_x: two * x, phi_y: two * y, phi_xx: two, phi_yy: two }
            }
            Self::FlatStrip { half_width } => {
                let d = x.abs() - T::lit(half_width);
                if d <= z {
                    return Jet { phi: z, phi_x: z, phi_y: z, phi_xx: z, phi_yy: z };
                }
                let sign = x.signum();
                let d2 = d * d;
                Jet { phi: d2 * d2, phi_x: sign * T::lit(4.0) * d2 * d, phi_y: z, phi_xx: T::lit(12.0) * d2, phi_yy: z }
            }
            Self::ConstantM1 => {
                let r = y.recip();
                Jet { phi: -y.ln(), phi_x: z, phi_y: -r, phi_xx: z, phi_yy: r * r }
            }
        }
    }

    /// `K = −e^{−2φ}(φ_xx + φ_yy)`.
    pub fn curvature<T: Real>(&self, x: T, y: T) -> T {
        let j = self.jet(x, y);
        -(-T::two() * j.phi).exp() * (j.phi_xx + j.phi_yy)
    }

    /// Largest curvature value on an `n × n` grid over the preset's sample window.
    pub fn max_curvature_on_grid(&self, n: usize) -> f64 {
        let (xr, yr) = match self {
            Self::ConstantM1 => ((-3.0, 3.0), (0.05, 5.0)),
            _ => ((-3.0, 3.0), (-3.0, 3.0)),
        };
        let at = |r: (f64, f64), i: usize| r.0 + (r.1 - r.0) * i as f64 / (n - 1).max(1) as f64;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(self.curvature(at(xr, i), at(yr, j)));
            }
        }
        worst
    }
}

/// Position, direction angle of the velocity and arclength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
    pub s: T,
}

impl<T: Real> GeodesicState<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta, s: T::zero() }
    }
}

/// Riccati scalar `u` of a horocycle-like solution, `u' = −K − u²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiState<T> {
    pub u: T,
}

/// `[x, y, ẋ, ẏ, u]`
type Ode<T> = [T; 5];

fn lift<T: Real>(m: &ConformalMetric, st: &GeodesicState<T>, u: T) -> Result<Ode<T>, JacobiError> {
    if !m.in_chart(st.x, st.y) {
        return Err(JacobiError::OutOfChart {
            x: st.x.to_f64().unwrap_or(f64::NAN),
            y: st.y.to_f64().unwrap_or(f64::NAN),
        });
    }
    let k = (-m.jet(st.x, st.y).phi).exp();
    Ok([st.x, st.y, k * st.theta.cos(), k * st.theta.sin(), u])
}

fn field<T: Real>(m: &ConformalMetric, q: &Ode<T>) -> Ode<T> {
    let j = m.jet(q[0], q[1]);
    let (vx, vy) = (q[2], q[3]);
    let g = vx * j.phi_x + vy * j.phi_y;
    let v2 = vx * vx + vy * vy;
    let two = T::two();
    let kc = -(-two * j.phi).exp() * (j.phi_xx + j.phi_yy);
    [vx, vy, -two * g * vx + v2 * j.phi_x, -two * g * vy + v2 * j.phi_y, -kc - q[4] * q[4]]
}

fn rk4<T: Real>(m: &ConformalMetric, q: &Ode<T>, h: T) -> Ode<T> {
    let add = |a: &Ode<T>, b: &Ode<T>, c: T| -> Ode<T> { std::array::from_fn(|i| a[i] + b[i] * c) };
    let half = h / T::two();
    let k1 = field(m, q);
    let k2 = field(m, &add(q, &k1, half));
    let k3 = field(m, &add(q, &k2, half));
    let k4 = field(m, &add(q, &k3, h));
    let six = T::lit(6.0);
    std::array::from_fn(|i| q[i] + h / six * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
}

fn speed<T: Real>(m: &ConformalMetric, q: &Ode<T>) -> T {
    m.jet(q[0], q[1]).phi.exp() * (q[2] * q[2] + q[3] * q[3]).sqrt()
}

fn state_of<T: Real>(q: &Ode<T>, s: T) -> GeodesicState<T> {
    GeodesicState { x: q[0], y: q[1], theta: q[3].atan2(q[2]), s }
}

struct Sweep<T> {
    states: Vec<GeodesicState<T>>,
    u: Vec<T>,
    last: Ode<T>,
    max_drift: T,
}

/// Integrates `steps` RK4 steps of signed size `h` from `q` at arclength `s0`.
fn sweep<T: Real>(m: &ConformalMetric, mut q: Ode<T>, s0: T, h: T, steps: usize) -> Result<Sweep<T>, JacobiError> {
    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
    let mut states = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    states.push(state_of(&q, s0));
    u.push(q[4]);
    let mut max_drift = T::zero();
    for i in 1..=steps {
        q = rk4(m, &q, h);
        let s = s0 + h * T::from_usize(i).unwrap();
        if !m.in_chart(q[0], q[1]) {
            return Err(JacobiError::OutOfChart { x: f(q[0]), y: f(q[1]) });
        }
        let drift = (speed(m, &q) - T::one()).abs();
        if !(drift <= T::lit(DRIFT_LIMIT)) {
            return Err(JacobiError::SpeedDrift { drift: f(drift), s: f(s) });
        }
        if !(q[4].abs() <= T::lit(BLOWUP)) {
            return Err(JacobiError::Blowup { u: f(q[4]), s: f(s) });
        }
        max_drift = max_drift.max(drift);
        states.push(state_of(&q, s));
        u.push(q[4]);
    }
    Ok(Sweep { states, u, last: q, max_drift })
}

fn steps_for<T: Real>(span: T, dt: T) -> Result<(usize, T), JacobiError> {
    let d = dt.to_f64().unwrap_or(f64::NAN);
    if !(d > 0.0 && d <= MAX_DT * (1.0 + 1e-12)) {
        return Err(JacobiError::InvalidStep(d));
    }
    let n = (span.abs() / dt).ceil().to_usize().unwrap_or(0).max(1);
    Ok((n, span / T::from_usize(n).unwrap()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<GeodesicState<T>>,
    pub max_speed_drift: T,
}

/// Fourth-order integration over arclength `t_total` (negative runs backwards)
/// in steps of at most `dt`.
pub fn integrate_geodesic<T: Real>(
    m: &ConformalMetric,
    s0: &GeodesicState<T>,
    t_total: T,
    dt: T,
) -> Result<Trajectory<T>, JacobiError> {
    let (n, h) = steps_for(t_total, dt)?;
    let sw = sweep(m, lift(m, s0, T::zero())?, s0.s, h, n)?;
    Ok(Trajectory { states: sw.states, max_speed_drift: sw.max_drift })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    RankOne,
    RankGe2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankReport<T> {
    pub rank: Rank,
    pub sup_abs_k: T,
    /// The classification only covers arclength `[−horizon, horizon]`.
    pub horizon: T,
}

pub fn rank_classify<T: Real>(
    m: &ConformalMetric,
    s0: &GeodesicState<T>,
    horizon: T,
    tol: T,
) -> Result<RankReport<T>, JacobiError> {
    let dt = T::lit(DEFAULT_DT);
    let mut sup = T::zero();
    for dir in [T::one(), -T::one()] {
        for st in integrate_geodesic(m, s0, dir * horizon, dt)?.states {
            sup = sup.max(m.curvature(st.x, st.y).abs());
        }
    }
    let rank = if sup <= tol { Rank::RankGe2 } else { Rank::RankOne };
    Ok(RankReport { rank, sup_abs_k: sup, horizon })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiReport<T> {
    pub u_stable: T,
    pub u_unstable: T,
    pub gap: T,
}

/// Geodesic state `span` away from `s0`, and the step used to get there.
fn endpoint<T: Real>(
    m: &ConformalMetric,
    s0: &GeodesicState<T>,
    span: T,
    dt: T,
) -> Result<(Ode<T>, usize, T), JacobiError> {
    let (n, h) = steps_for(span, dt)?;
    let sw = sweep(m, lift(m, s0, T::zero())?, s0.s, h, n)?;
    Ok((sw.last, n, h))
}

/// Unstable and stable Riccati solutions at `s0`: `u' = −K − u²` from `u = 0`
/// at `∓horizon`.
pub fn riccati_subspaces<T: Real>(
    m: &ConformalMetric,
    s0: &GeodesicState<T>,
    horizon: T,
    dt: T,
) -> Result<RiccatiReport<T>, JacobiError> {
    let mut out = [T::zero(); 2];
    for (k, sign) in [-T::one(), T::one()].into_iter().enumerate() {
        let (mut q, n, h) = endpoint(m, s0, sign * horizon, dt)?;
        q[4] = T::zero();
        out[k] = sweep(m, q, s0.s + sign * horizon, -h, n)?.last[4];
    }
    let (u_unstable, u_stable) = (out[0], out[1]);
    Ok(RiccatiReport { u_stable, u_unstable, gap: u_unstable - u_stable })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub k: f64,
    pub u_stable: f64,
    pub u_unstable: f64,
}

/// Samples on `[−horizon, horizon]` with both Riccati solutions carried along
/// the whole window.
pub fn trajectory_rows(
    m: &ConformalMetric,
    s0: &GeodesicState<f64>,
    horizon: f64,
    dt: f64,
) -> Result<Vec<TrajectoryRow>, JacobiError> {
    let (mut q, n, h) = endpoint(m, s0, -horizon, dt)?;
    q[4] = 0.0;
    let fwd = sweep(m, q, s0.s - horizon, -h, 2 * n)?;
    let mut q = fwd.last;
    q[4] = 0.0;
    let bwd = sweep(m, q, s0.s + horizon, h, 2 * n)?;
    Ok(fwd
        .states
        .iter()
        .zip(&fwd.u)
        .zip(bwd.u.iter().rev())
        .map(|((st, &uu), &us)| TrajectoryRow {
            s: st.s,
            x: st.x,
            y: st.y,
            theta: st.theta,
            k: m.curvature(st.x, st.y),
            u_stable: us,
            u_unstable: uu,
        })
        .collect())
}

pub fn write_trajectory_csv(rows: &[TrajectoryRow], path: &Path) -> Result<(), JacobiError> {
    let io = |e: csv::Error| JacobiError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["s", "x", "y", "theta", "K", "u_stable", "u_unstable"]).map_err(io)?;
    for r in rows {
        w.write_record([r.s, r.x, r.y, r.theta, r.k, r.u_stable, r.u_unstable].map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| JacobiError::Io(e.to_string()))
}

/// `J(s)` on `[0, horizon]` with `J(0) = 1`, `J' = u_unstable·J` (trapezoidal quadrature).
pub fn unstable_jacobi_profile(
    m: &ConformalMetric,
    s0: &GeodesicState<f64>,
    horizon: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, JacobiError> {
    let rows = trajectory_rows(m, s0, horizon, dt)?;
    let start = rows.iter().position(|r| r.s >= s0.s - 1e-12).unwrap_or(0);
    let mut out = vec![(rows[start].s, 1.0)];
    let mut log_j = 0.0;
    for w in rows[start..].windows(2) {
        log_j += 0.5 * (w[0].u_unstable + w[1].u_unstable) * (w[1].s - w[0].s);
        out.push((w[1].s, log_j.exp()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierCase {
    pub start: GeodesicState<f64>,
    pub rank: Rank,
    pub sup_abs_k: f64,
    pub gap: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierSuite {
    pub preset: &'static str,
    pub horizon: f64,
    pub cases: Vec<ClassifierCase>,
    pub disagreements: usize,
}

/// Random starting state in the preset's sample window; for the flat strip
/// every other start is vertical inside the strip.
pub fn random_start(m: &ConformalMetric, rng: &mut impl Rng, index: usize) -> GeodesicState<f64> {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    match *m {
        ConformalMetric::FlatStrip { half_width } => {
            let x = rng.gen_range(-0.9 * half_width..0.9 * half_width);
            let y = rng.gen_range(-1.0..1.0);
            let theta =
                if index % 2 == 0 { std::f64::consts::FRAC_PI_2 * if rng.gen() { 1.0 } else { 3.0 } } else { theta };
            GeodesicState::new(x, y, theta)
        }
        ConformalMetric::ConstantM1 => GeodesicState::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0), theta),
        _ => GeodesicState::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), theta),
    }
}

/// Runs both classifiers on `n` random geodesics.
pub fn classifier_suite(
    m: &ConformalMetric,
    n: usize,
    seed: u64,
    horizon: f64,
    rank_tol: f64,
    gap_tol: f64,
) -> Result<ClassifierSuite, JacobiError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n);
    for i in 0..n {
        let start = random_start(m, &mut rng, i);
        let r = rank_classify(m, &start, horizon, rank_tol)?;
        let g = riccati_subspaces(m, &start, horizon, DEFAULT_DT)?;
        let agree = (g.gap > gap_tol) == (r.rank == Rank::RankOne);
        cases.push(ClassifierCase { start, rank: r.rank, sup_abs_k: r.sup_abs_k, gap: g.gap, agree });
    }
    let disagreements = cases.iter().filter(|c| !c.agree).count();
    Ok(ClassifierSuite { preset: m.name(), horizon, cases, disagreements })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_nonpositive() {
        for m in ConformalMetric::presets() {
            assert!(m.max_curvature_on_grid(61) <= 1e-12, "{}", m.name());
        }
        assert!((ConformalMetric::ConstantM1.curvature(0.3, 0.01_f64) + 1.0).abs() < 1e-14);
        assert!(ConformalMetric::preset("hyperbolic").is_err());
    }

    #[test]
    fn flat_lines_in_both_precisions() {
        let m = ConformalMetric::Flat;
        let s0 = GeodesicState::new(0.2, -0.4, 0.7);
        let tr = integrate_geodesic(&m, &s0, 20.0, 0.01).unwrap();
        for st in &tr.states {
            assert!((st.x - (0.2 + st.s * 0.7f64.cos())).abs() < 1e-9);
            assert!((st.y - (-0.4 + st.s * 0.7f64.sin())).abs() < 1e-9);
        }
        let tr32 = integrate_geodesic(&m, &GeodesicState::new(0.0f32, 0.0, 0.5), 5.0, 0.01).unwrap();
        let last = tr32.states.last().unwrap();
        assert!((last.x - 5.0 * 0.5f32.cos()).abs() < 1e-4);
    }

    #[test]
    fn symmetric_axis_is_a_geodesic() {
        let m = ConformalMetric::StrictlyNegative;
        let tr = integrate_geodesic(&m, &GeodesicState::new(0.0, 0.0, 0.0), 10.0, 0.01).unwrap();
        assert!(tr.states.iter().all(|s| s.y == 0.0 && s.theta == 0.0));
        assert!(tr.max_speed_drift < 1e-6);
    }

    #[test]
    fn step_and_chart_errors() {
        let s0 = GeodesicState::new(0.0, 1.0, 0.0);
        assert_eq!(
            integrate_geodesic(&ConformalMetric::Flat, &s0, 1.0, 0.05).unwrap_err(),
            JacobiError::InvalidStep(0.05)
        );
        let bad = GeodesicState::new(0.0, -1.0, 0.0);
        assert!(matches!(
            integrate_geodesic(&ConformalMetric::ConstantM1, &bad, 1.0, 0.01),
            Err(JacobiError::OutOfChart { .. })
        ));
    }

    #[test]
    fn constant_curvature_riccati() {
        let m = ConformalMetric::ConstantM1;
        let r = riccati_subspaces(&m, &GeodesicState::new(0.3f64, 1.2, 2.0), 30.0, 0.01).unwrap();
        assert!((r.u_unstable - 1.0).abs() < 1e-6 && (r.u_stable + 1.0).abs() < 1e-6, "{r:?}");
        let f = riccati_subspaces(&ConformalMetric::Flat, &GeodesicState::new(0.0, 0.0, 1.0), 30.0, 0.01).unwrap();
        assert_eq!(f.gap, 0.0);
    }

    #[test]
    fn trajectory_rows_cover_the_window() {
        let m = ConformalMetric::ConstantM1;
        let rows = trajectory_rows(&m, &GeodesicState::new(0.0, 1.0, 1.0), 5.0, 0.01).unwrap();
        assert_eq!(rows.len(), 1001);
        assert!((rows[0].s + 5.0).abs() < 1e-9 && (rows[1000].s - 5.0).abs() < 1e-9);
        assert_eq!(rows[0].u_unstable, 0.0);
        assert_eq!(rows[1000].u_stable, 0.0);
        assert!((rows[500].u_unstable - 5f64.tanh()).abs() < 1e-8);
    }
}
