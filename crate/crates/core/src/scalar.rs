//! Scalar abstraction shared by the numeric modules.
//!
//! Everything that only does arithmetic on probabilities is written against
//! [`Real`], so the same code runs in `f64` (the default everywhere) or
//! `f32`. Sampling always happens in `f64` and is converted on the way in.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Display
{
    /// Converts an `f64` constant; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }

    /// Machine epsilon of the concrete type, as `f64`.
    fn epsilon_f64() -> f64;
}

impl Real for f64 {
    fn epsilon_f64() -> f64 {
        f64::EPSILON
    }
}

impl Real for f32 {
    fn epsilon_f64() -> f64 {
        f32::EPSILON as f64
    }
}
