//! Scalar abstraction shared by all of the numeric code.
//!
//! Everything that does arithmetic on signal levels, geometry or
//! probabilities is written against [`Real`], so the whole modem can be run
//! in `f32` or `f64`. Pixel storage stays 8-bit regardless of the scalar.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn lit(v: f64) -> Self;

    /// Widens to `f64` for the few special functions only available there.
    fn as_f64(self) -> f64;

    /// Complementary error function.
    fn erfc(self) -> Self {
        Self::lit(libm::erfc(self.as_f64()))
    }
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Round half up (towards +inf), the rounding rule used for every pixel
/// write in the pipeline.
#[inline]
pub fn round_half_up<T: Real>(x: T) -> T {
    (x + T::lit(0.5)).floor()
}

/// Rounds, clamps to `[0, 255]` and converts to a pixel count.
#[inline]
pub fn to_count<T: Real>(x: T) -> u8 {
    let r = round_half_up(x);
    if r <= T::zero() {
        0
    } else if r >= T::lit(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(255)
    }
}
