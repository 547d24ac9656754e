use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar used by the model and the closed-form analytics: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts a literal constant. Every `f64` literal is representable,
    /// possibly rounded, in both supported widths.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count converts to scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
