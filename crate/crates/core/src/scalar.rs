//! Floating-point abstraction shared by the formula layers.
//!
//! Propagation, PHY rate arithmetic and the metric formulas are written
//! against [`Scalar`] so they can be evaluated in `f32` or `f64`. The event
//! engine itself runs in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        // FromPrimitive for f32/f64 never fails on finite input.
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `10·log10(x)`.
#[inline]
pub fn to_db<T: Scalar>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

/// Inverse of [`to_db`].
#[inline]
pub fn from_db<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    from_db(dbm - T::lit(30.0))
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm<T: Scalar>(watts: T) -> T {
    to_db(watts) + T::lit(30.0)
}
