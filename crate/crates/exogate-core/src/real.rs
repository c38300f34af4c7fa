//! Scalar abstraction for the controller math.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the controller runs on: `f32` or `f64`.
pub trait Real: Float + FromPrimitive + NumAssign + Debug + Default + 'static {
    /// Lossy conversion from an `f64` constant (tunings, tolerances).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for converting literal constants inside generic code.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64_lossy(x)
}
