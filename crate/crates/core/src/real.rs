use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar types the numerical core runs on.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported scalars.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self / rhs` with one Newton correction. A no-op in cost terms for
    /// hardware floats; for double-double it recovers full precision where
    /// the native quotient only delivers about 53 bits.
    fn quot(self, rhs: Self) -> Self {
        let q = self / rhs;
        q + (self - q * rhs) / rhs
    }

    /// Square root with one Newton correction, for the same reason as
    /// [`quot`](Real::quot).
    fn sqrt_refined(self) -> Self {
        let r = self.sqrt();
        if r == Self::zero() || !r.is_finite() {
            return r;
        }
        r + (self - r * r) / (r + r)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}
