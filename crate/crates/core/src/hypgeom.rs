//! Hyperbolic plane in the Poincaré disk model.
//!
//! Isometries are elements of SU(1,1), i.e. matrices `[[a, b], [conj(b), conj(a)]]`
//! with `|a|² − |b|² = 1`, acting by `z ↦ (a z + b) / (conj(b) z + conj(a))`.
//! Unit tangent vectors are stored as a base point plus the Euclidean direction
//! angle of the tangent in the disk chart (the chart is conformal, so this angle
//! is also the Riemannian one).

use std::ops::Mul;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{wrap_angle, Real};

/// Interior margin enforced on [`DiskPoint`] construction.
pub const DISK_MARGIN: f64 = 1e-12;
/// Tolerance on `| |u| − 1 |` for [`BoundaryPoint`].
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Tolerance on the SU(1,1) determinant, relative to `max(1, |a|²)`.
pub const DET_TOL: f64 = 1e-9;
/// Half-width of the window `| |tr| − 2 |` that cannot be classified reliably.
pub const PARABOLIC_WINDOW: f64 = 1e-9;
/// Products are renormalized to unit determinant every this many compositions.
pub const RENORMALIZE_EVERY: usize = 32;

const DEGENERATE_DENOM: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {0} is not inside the unit disk")]
    OutsideDisk(String),
    #[error("boundary point has modulus {0}, expected 1")]
    NotOnCircle(String),
    #[error("matrix is not in SU(1,1): |a|^2 - |b|^2 = {0}")]
    NotUnimodular(String),
    #[error("Möbius denominator vanished ({0})")]
    Degenerate(String),
    #[error("trace {0} lies inside the parabolic window; classification is ambiguous")]
    AmbiguousTrace(String),
}

/// A point of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint<T: Real = f64> {
    z: Complex<T>,
}

impl<T: Real> DiskPoint<T> {
    pub fn new(z: Complex<T>) -> Result<Self, GeomError> {
        if !(z.norm() < T::one() - T::lit(DISK_MARGIN)) {
            return Err(GeomError::OutsideDisk(format!("{z}")));
        }
        Ok(Self { z })
    }

    pub fn from_re_im(re: T, im: T) -> Result<Self, GeomError> {
        Self::new(Complex::new(re, im))
    }

    /// Point at hyperbolic distance `r` from the origin in direction `theta`.
    pub fn polar(r: T, theta: T) -> Result<Self, GeomError> {
        let rho = (r / T::two()).tanh();
        Self::new(Complex::from_polar(rho, theta))
    }

    pub fn origin() -> Self {
        Self { z: Complex::new(T::zero(), T::zero()) }
    }

    /// Pulls points that rounded onto the margin back inside it.
    pub(crate) fn clamped(z: Complex<T>) -> Self {
        let lim = T::one() - T::lit(2.0 * DISK_MARGIN);
        let n = z.norm();
        if n < lim {
            Self { z }
        } else {
            Self { z: z * (lim / n) }
        }
    }

    #[inline]
    pub fn z(&self) -> Complex<T> {
        self.z
    }

    /// Hyperbolic distance to the origin.
    pub fn radius(&self) -> T {
        T::two() * self.z.norm().atanh()
    }
}

/// A point of the boundary circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint<T: Real = f64> {
    u: Complex<T>,
}

impl<T: Real> BoundaryPoint<T> {
    pub fn new(u: Complex<T>) -> Result<Self, GeomError> {
        let tol = T::lit(BOUNDARY_TOL).max(T::epsilon() * T::lit(8.0));
        if !((u.norm() - T::one()).abs() < tol) {
            return Err(GeomError::NotOnCircle(format!("{}", u.norm())));
        }
        Ok(Self { u })
    }

    /// Projects a nonzero complex number radially onto the circle.
    pub fn normalized(u: Complex<T>) -> Self {
        Self { u: u / u.norm() }
    }

    pub fn from_angle(theta: T) -> Self {
        Self { u: Complex::from_polar(T::one(), theta) }
    }

    #[inline]
    pub fn u(&self) -> Complex<T> {
        self.u
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(&self) -> T {
        wrap_angle(self.u.arg())
    }
}

/// A unit tangent vector: base point plus direction angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint<T: Real = f64> {
    pub base: DiskPoint<T>,
    dir: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(base: DiskPoint<T>, dir: T) -> Self {
        Self { base, dir: wrap_angle(dir) }
    }

    #[inline]
    pub fn dir(&self) -> T {
        self.dir
    }

    /// The vector on the geodesic from `back` to `forward` whose base point is
    /// closest to the origin, pointing towards `forward`.
    pub fn on_geodesic(back: BoundaryPoint<T>, forward: BoundaryPoint<T>) -> Self {
        let (xi, eta) = (forward.u(), back.u());
        let s = xi + eta;
        let half = T::lit(0.5);
        let cos_a = s.norm() * half;
        if cos_a < T::lit(1e-14) {
            return Self::new(DiskPoint::origin(), forward.angle());
        }
        let m = s / s.norm();
        let sin_a = (xi - eta).norm() * half;
        let foot = m * (cos_a / (T::one() + sin_a));
        let i = Complex::new(T::zero(), T::one());
        // Tangent at the foot is perpendicular to the radius, oriented towards xi.
        let t = if (xi * m.conj()).im > T::zero() { i * m } else { -(i * m) };
        Self::new(DiskPoint::clamped(foot), t.arg())
    }
}

/// Orientation-preserving isometry of the disk, as an SU(1,1) matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry<T: Real = f64> {
    a: Complex<T>,
    b: Complex<T>,
}

impl<T: Real> Isometry<T> {
    pub fn new(a: Complex<T>, b: Complex<T>) -> Result<Self, GeomError> {
        let det = a.norm_sqr() - b.norm_sqr();
        let scale = T::one().max(a.norm_sqr());
        if !((det - T::one()).abs() <= T::lit(DET_TOL) * scale) {
            return Err(GeomError::NotUnimodular(format!("{det}")));
        }
        Ok(Self { a, b })
    }

    pub(crate) fn from_raw(a: Complex<T>, b: Complex<T>) -> Self {
        Self { a, b }
    }

    pub fn identity() -> Self {
        Self::from_raw(Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    /// Rotation about the origin by `theta`.
    pub fn rotation(theta: T) -> Self {
        let h = theta / T::two();
        Self::from_raw(Complex::from_polar(T::one(), h), Complex::new(T::zero(), T::zero()))
    }

    /// The transvection along the diameter through `p` that maps the origin to `p`.
    pub fn translation_to(p: DiskPoint<T>) -> Self {
        let k = (T::one() - p.z().norm_sqr()).sqrt().recip();
        Self::from_raw(Complex::new(k, T::zero()), p.z() * k)
    }

    /// Isometry taking the origin with direction 0 to `v`.
    pub fn frame(v: &PhasePoint<T>) -> Self {
        Self::translation_to(v.base) * Self::rotation(v.dir())
    }

    #[inline]
    pub fn a(&self) -> Complex<T> {
        self.a
    }

    #[inline]
    pub fn b(&self) -> Complex<T> {
        self.b
    }

    pub fn determinant(&self) -> T {
        self.a.norm_sqr() - self.b.norm_sqr()
    }

    pub fn inverse(&self) -> Self {
        Self::from_raw(self.a.conj(), -self.b)
    }

    /// Rescales to unit determinant.
    pub fn renormalized(&self) -> Self {
        let s = self.determinant().sqrt().recip();
        Self::from_raw(self.a * s, self.b * s)
    }

    /// `2 Re a`; the sign is not meaningful for the Möbius action.
    pub fn trace(&self) -> T {
        T::two() * self.a.re
    }

    /// Hyperbolic distance from the origin to its image.
    pub fn displacement(&self) -> T {
        T::two() * self.b.norm().asinh()
    }

    /// Möbius action on a raw complex number (no checks).
    #[inline]
    pub fn map_z(&self, z: Complex<T>) -> Complex<T> {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Argument of the derivative of the action at `z`.
    #[inline]
    pub fn derivative_arg(&self, z: Complex<T>) -> T {
        -T::two() * (self.b.conj() * z + self.a.conj()).arg()
    }

    fn denominator(&self, z: Complex<T>) -> Result<Complex<T>, GeomError> {
        let d = self.b.conj() * z + self.a.conj();
        if d.norm() < T::lit(DEGENERATE_DENOM) {
            return Err(GeomError::Degenerate(format!("{d}")));
        }
        Ok(d)
    }

    pub fn apply(&self, p: &DiskPoint<T>) -> Result<DiskPoint<T>, GeomError> {
        let d = self.denominator(p.z())?;
        Ok(DiskPoint::clamped((self.a * p.z() + self.b) / d))
    }

    pub fn apply_phase(&self, v: &PhasePoint<T>) -> Result<PhasePoint<T>, GeomError> {
        let d = self.denominator(v.base.z())?;
        let base = DiskPoint::clamped((self.a * v.base.z() + self.b) / d);
        Ok(PhasePoint::new(base, v.dir() - T::two() * d.arg()))
    }

    pub fn apply_boundary(&self, xi: &BoundaryPoint<T>) -> BoundaryPoint<T> {
        BoundaryPoint::normalized(self.map_z(xi.u()))
    }

    /// Conjugacy-invariant classification by trace.
    pub fn trace_class(&self) -> Result<TraceClass<T>, GeomError> {
        let tol = T::lit(PARABOLIC_WINDOW);
        if self.b.norm() <= tol && self.a.im.abs() <= tol {
            return Ok(TraceClass::Identity);
        }
        let tr = self.trace().abs();
        let two = T::two();
        if (tr - two).abs() <= tol {
            return Err(GeomError::AmbiguousTrace(format!("{}", self.trace())));
        }
        if tr < two {
            return Ok(TraceClass::Elliptic { rotation: two * (tr / two).acos() });
        }
        let root = (self.a.re * self.a.re - T::one()).sqrt();
        let bc = self.b.conj();
        let im = Complex::new(T::zero(), self.a.im);
        let z1 = (im + root) / bc;
        let z2 = (im - root) / bc;
        // Attracting fixed point: |g'(z)| = 1 / |conj(b) z + conj(a)|² < 1.
        let (att, rep) =
            if (bc * z1 + self.a.conj()).norm() > (bc * z2 + self.a.conj()).norm() { (z1, z2) } else { (z2, z1) };
        Ok(TraceClass::Hyperbolic {
            translation_length: two * (tr / two).acosh(),
            attracting: BoundaryPoint::normalized(att),
            repelling: BoundaryPoint::normalized(rep),
        })
    }
}

impl<T: Real> Mul for Isometry<T> {
    type Output = Isometry<T>;

    fn mul(self, rhs: Self) -> Self {
        Self::from_raw(self.a * rhs.a + self.b * rhs.b.conj(), self.a * rhs.b + self.b * rhs.a.conj())
    }
}

/// Result of [`Isometry::trace_class`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceClass<T: Real = f64> {
    Identity,
    Elliptic {
        rotation: T,
    },
    Hyperbolic {
        translation_length: T,
        /// Forward endpoint of the axis.
        attracting: BoundaryPoint<T>,
        /// Backward endpoint of the axis.
        repelling: BoundaryPoint<T>,
    },
}

impl<T: Real> TraceClass<T> {
    pub fn translation_length(&self) -> Option<T> {
        match self {
            TraceClass::Hyperbolic { translation_length, .. } => Some(*translation_length),
            _ => None,
        }
    }
}

/// Hyperbolic distance, `2 asinh(|p − q| / sqrt((1 − |p|²)(1 − |q|²)))`.
///
/// Equivalent to `arccosh(1 + 2|p−q|²/((1−|p|²)(1−|q|²)))` but accurate for
/// nearby points.
pub fn dist<T: Real>(p: &DiskPoint<T>, q: &DiskPoint<T>) -> T {
    dist_z(p.z(), q.z())
}

#[inline]
pub(crate) fn dist_z<T: Real>(p: Complex<T>, q: Complex<T>) -> T {
    let one = T::one();
    let den = ((one - p.norm_sqr()) * (one - q.norm_sqr())).sqrt();
    T::two() * ((p - q).norm() / den).asinh()
}

/// Poisson kernel `(1 − |z|²) / |z − ξ|²`.
#[inline]
pub fn poisson_kernel<T: Real>(z: &DiskPoint<T>, xi: &BoundaryPoint<T>) -> T {
    (T::one() - z.z().norm_sqr()) / (z.z() - xi.u()).norm_sqr()
}

/// Busemann function `b(p, q, ξ) = lim d(q, xₙ) − d(p, xₙ)` for `xₙ → ξ`.
///
/// Negative when `p`, `q`, `ξ` lie on a geodesic in that order.
pub fn busemann<T: Real>(p: &DiskPoint<T>, q: &DiskPoint<T>, xi: &BoundaryPoint<T>) -> T {
    poisson_kernel(p, xi).ln() - poisson_kernel(q, xi).ln()
}

/// Geodesic flow on the unit tangent bundle of the disk.
pub fn flow<T: Real>(v: &PhasePoint<T>, t: T) -> PhasePoint<T> {
    let p = v.base.z();
    let w = Complex::from_polar((t / T::two()).tanh(), v.dir());
    let den = T::one().into_complex() + p.conj() * w;
    let z = (w + p) / den;
    PhasePoint::new(DiskPoint::clamped(z), v.dir() - T::two() * den.arg())
}

/// Forward and backward endpoints `(v_∞, v_{−∞})` of the geodesic through `v`.
pub fn endpoints<T: Real>(v: &PhasePoint<T>) -> (BoundaryPoint<T>, BoundaryPoint<T>) {
    let g = Isometry::translation_to(v.base);
    let e = Complex::from_polar(T::one(), v.dir());
    (BoundaryPoint::normalized(g.map_z(e)), BoundaryPoint::normalized(g.map_z(-e)))
}

/// Hyperbolic distance from the origin to the geodesic with the given endpoints.
pub fn distance_to_geodesic<T: Real>(xi: &BoundaryPoint<T>, eta: &BoundaryPoint<T>) -> T {
    PhasePoint::on_geodesic(*eta, *xi).base.radius()
}

/// Hyperboloid-model helpers: points are future unit timelike vectors of
/// R^{2,1} with the form `<x, y> = −x₀y₀ + x₁y₁ + x₂y₂`.
pub mod hyperboloid {
    use num_complex::Complex;

    use super::{DiskPoint, PhasePoint};
    use crate::scalar::Real;

    pub type Vec3<T> = [T; 3];

    #[inline]
    pub fn dot<T: Real>(x: &Vec3<T>, y: &Vec3<T>) -> T {
        -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
    }

    #[inline]
    pub fn from_disk<T: Real>(z: Complex<T>) -> Vec3<T> {
        let s = T::one() - z.norm_sqr();
        let k = T::two() / s;
        [k - T::one(), k * z.re, k * z.im]
    }

    #[inline]
    pub fn to_disk<T: Real>(x: &Vec3<T>) -> Complex<T> {
        let d = T::one() + x[0];
        Complex::new(x[1] / d, x[2] / d)
    }

    /// Position and unit tangent of the geodesic through `v`:
    /// the orbit is `cosh t · p + sinh t · w`.
    pub fn frame<T: Real>(v: &PhasePoint<T>) -> (Vec3<T>, Vec3<T>) {
        let z = v.base.z();
        let e = Complex::from_polar(T::one(), v.dir());
        let s = T::one() - z.norm_sqr();
        let c = (z.conj() * e).re;
        let t = e + z * (T::two() * c / s);
        (from_disk(z), [T::two() * c / s, t.re, t.im])
    }

    #[inline]
    pub fn point_at<T: Real>(p: &Vec3<T>, w: &Vec3<T>, t: T) -> Vec3<T> {
        let (c, s) = (t.cosh(), t.sinh());
        [c * p[0] + s * w[0], c * p[1] + s * w[1], c * p[2] + s * w[2]]
    }

    /// Phase point at time `t` along `cosh t · p + sinh t · w`.
    pub fn phase_at<T: Real>(p: &Vec3<T>, w: &Vec3<T>, t: T) -> PhasePoint<T> {
        let (c, s) = (t.cosh(), t.sinh());
        let x = [c * p[0] + s * w[0], c * p[1] + s * w[1], c * p[2] + s * w[2]];
        let dx = [s * p[0] + c * w[0], s * p[1] + c * w[1], s * p[2] + c * w[2]];
        let d = T::one() + x[0];
        let z = Complex::new(x[1] / d, x[2] / d);
        let dz = Complex::new(dx[1], dx[2]) / d - z * (dx[0] / d);
        PhasePoint::new(DiskPoint::clamped(z), dz.arg())
    }

    /// Sub-interval of `[lo, hi]` on which `a cosh t + b sinh t ≤ 0`.
    pub fn clip_halfspace<T: Real>(a: T, b: T, lo: T, hi: T) -> Option<(T, T)> {
        if b.abs() <= a.abs() {
            return if a <= T::zero() { Some((lo, hi)) } else { None };
        }
        let t0 = (-a / b).atanh();
        let (l, h) = if b > T::zero() { (lo, hi.min(t0)) } else { (lo.max(t0), hi) };
        (l <= h).then_some((l, h))
    }

    /// Times at which `cosh t · p + sinh t · w` is within distance `radius` of `c`.
    pub fn ball_interval<T: Real>(p: &Vec3<T>, w: &Vec3<T>, c: &Vec3<T>, radius: T) -> Option<(T, T)> {
        let a = -dot(p, c);
        let b = -dot(w, c);
        let m = (a * a - b * b).max(T::zero()).sqrt();
        let kappa = radius.cosh() / m;
        if kappa < T::one() {
            return None;
        }
        let shift = (b / a).atanh();
        let half = kappa.acosh();
        Some((-shift - half, -shift + half))
    }
}

trait IntoComplex<T> {
    fn into_complex(self) -> Complex<T>;
}

impl<T: Real> IntoComplex<T> for T {
    fn into_complex(self) -> Complex<T> {
        Complex::new(self, T::zero())
    }
}
