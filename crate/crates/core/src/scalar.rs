//! Scalar abstraction shared by the geometry and Jacobi kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the geometric kernels are generic over (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Reduces an angle to `[0, 2π)`.
#[inline]
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let tau = T::TAU();
    let r = theta % tau;
    let r = if r < T::zero() { r + tau } else { r };
    // `r + tau` can round up to exactly tau for tiny negative inputs.
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// Unsigned angular distance between two angles, in `[0, π]`.
#[inline]
pub fn angle_distance<T: Real>(a: T, b: T) -> T {
    let d = wrap_angle(a - b);
    if d > T::PI() {
        T::TAU() - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_range() {
        for &x in &[-1e-18_f64, -7.0, 0.0, 6.283185307179586, 100.0, -100.0] {
            let w = wrap_angle(x);
            assert!((0.0..std::f64::consts::TAU).contains(&w), "{x} -> {w}");
        }
        assert!(wrap_angle(-1e-7_f32) < std::f32::consts::TAU);
    }

    #[test]
    fn angle_distance_is_symmetric() {
        assert!((angle_distance(0.1_f64, 6.2) - (0.1 + std::f64::consts::TAU - 6.2)).abs() < 1e-12);
        assert_eq!(angle_distance(1.0_f64, 1.0), 0.0);
        assert!((angle_distance(0.0_f64, std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-15);
    }
}
