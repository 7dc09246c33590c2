//! Scalar abstraction shared by every numerical module.

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the model is generic over (`f32` or `f64`).
///
/// Transcendental functions (`sin`, `cosh`, `acos`, ...) come from
/// [`nalgebra::ComplexField`]; conversions come from `num-traits`.
pub trait Real: RealField + Copy + FloatConst + FromPrimitive + ToPrimitive + Send + Sync {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the scalar type.
    fn epsilon() -> Self;
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff<T: Real>(a: T, b: T, floor: T) -> T {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() / scale
}
