//! Scalar abstraction for the floating-point parts of the toolkit.
//!
//! Matrix structure data is exact integer arithmetic and does not go through
//! this trait; everything that lives on the group (points, paths, eigenvalues,
//! bounds, estimates) is generic over [`Real`], with `f64` aliases exported at
//! the crate root.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant converts to Real")
    }

    /// Conversion from a (small) unsigned count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to Real")
    }

    /// Lossy conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
