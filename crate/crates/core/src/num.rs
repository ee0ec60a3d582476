//! Scalar abstraction for every quantity that behaves like a probability or a
//! (possibly fractional) count.
//!
//! All weighted types in this crate are generic over [`Weight`] so the same
//! algorithms run in `f64` (the default throughout the CLI) or `f32`. The
//! trait is a thin bundle of `num-traits` capabilities plus the conversions
//! and bounds the library needs; it is sealed in practice by the blanket of
//! supertraits rather than by a private token, so downstream crates may
//! instantiate it for their own float-like types if they satisfy the bounds.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for rule weights, fractional counts, log
/// probabilities and derived statistics.
pub trait Weight:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Tolerance for "this family of weights sums to one" checks.
    ///
    /// The tolerance is type-specific: `f64` carries enough precision for a
    /// 1e-9 budget, while `f32` arithmetic on long rule families cannot, so it
    /// gets a correspondingly looser bound.
    fn normalization_tolerance() -> Self;

    /// Lossless-enough conversion from `f64` literals and configuration
    /// values. Panics only if the value is outside the type's range, which
    /// cannot happen for probabilities.
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 must convert into a Weight scalar")
    }
}

impl Weight for f64 {
    fn normalization_tolerance() -> Self {
        1e-9
    }
}

impl Weight for f32 {
    fn normalization_tolerance() -> Self {
        1e-5
    }
}
