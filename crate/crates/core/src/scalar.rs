//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar the algorithms can run on: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`. Never fails for the supported types.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Conversion from a count.
    #[inline]
    fn of_count(n: u64) -> Self {
        <Self as FromPrimitive>::from_u64(n).expect("count is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean. Returns zero for an empty slice. Accumulates offsets from
/// the first value, which keeps constant vectors exact.
pub fn mean<F: Scalar>(values: &[F]) -> F {
    let Some(&first) = values.first() else {
        return F::zero();
    };
    first + values.iter().map(|&v| v - first).sum::<F>() / F::of_count(values.len() as u64)
}

/// Sample standard deviation (n - 1 divisor). Zero when fewer than two values.
pub fn sample_std<F: Scalar>(values: &[F]) -> F {
    if values.len() < 2 {
        return F::zero();
    }
    let mu = mean(values);
    let ss: F = values.iter().map(|&v| (v - mu) * (v - mu)).sum();
    (ss / F::of_count(values.len() as u64 - 1)).sqrt()
}
