use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar the engine computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Lossy numeric conversion; panics only for values no float can hold.
    #[inline]
    fn cast<U: ToPrimitive>(u: U) -> Self {
        <Self as NumCast>::from(u).expect("numeric cast into float")
    }

    #[inline]
    fn lit(v: f64) -> Self {
        Self::cast(v)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
