//! Scalar abstraction for the analytics layer.
//!
//! The analytics only need ordered field arithmetic, so they are written once
//! against [`Scalar`] and instantiated for `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + FromStr + Send + Sync + 'static
{
    /// Relative tolerance under which two IPC values count as a tie.
    fn tie_epsilon() -> Self {
        Self::from_f64(crate::TIE_EPSILON).unwrap()
    }

    fn hundred() -> Self {
        Self::from_u8(100).unwrap()
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Mean of a slice in index order; zero for an empty slice.
pub fn mean<F: Scalar>(values: &[F]) -> F {
    if values.is_empty() {
        return F::zero();
    }
    let sum = values.iter().fold(F::zero(), |acc, &v| acc + v);
    sum / F::from_usize_lossy(values.len())
}

/// True when `candidate` is within the relative tie tolerance of `best`.
pub fn within_tie<F: Scalar>(best: F, candidate: F) -> bool {
    best - candidate <= F::tie_epsilon() * best
}
