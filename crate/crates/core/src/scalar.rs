//! Floating-point scalar abstraction for the statistics kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point scalar: f32 or f64.
///
/// All descriptive statistics and bias computations are generic over this
/// trait; the crate root fixes [`crate::Real`] = `f64` for the pipeline.
pub trait Scalar: Float + FromPrimitive + Display + Debug + Send + Sync + 'static {
    /// Lossless-enough conversion from the count of a sample.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("sample count representable as scalar")
    }

    /// Percentage scale constant (100).
    fn hundred() -> Self {
        Self::from_u8(100).expect("100 representable as scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
