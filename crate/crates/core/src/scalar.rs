//! Scalar abstraction shared by the numeric kernels.
//!
//! Quadrature, density grids, divergences, Wasserstein evaluators, the slope
//! fit and the plug-in estimator are written once against [`Real`] and work
//! for `f32` and `f64`. Exact rational arithmetic enters only through
//! [`Field`], used by the bump coefficient solve.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A field with exact or floating division, enough for Gaussian elimination.
pub trait Field: Num + Signed + Clone + PartialOrd + Debug {}

impl<T: Num + Signed + Clone + PartialOrd + Debug> Field for T {}
