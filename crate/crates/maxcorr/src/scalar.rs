//! Scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the statistic kernels are generic over.
///
/// Implemented by `f32` and `f64` through the blanket impl below. The bound
/// set is the intersection of what the kernels need: IEEE arithmetic and
/// elementary functions (`Float`), conversions from the `f64` constants the
/// formulas are stated in, and thread safety for the parallel kernels.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + AddAssign + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only for exotic scalar types
    /// that cannot represent ordinary finite values.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant must convert")
    }

    /// Widens to `f64` for reporting and serialization.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("real scalar must widen to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + AddAssign
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
