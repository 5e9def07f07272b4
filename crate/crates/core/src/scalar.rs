//! Scalar abstraction for the numeric core.
//!
//! All envelope, sampling, and bandit code is generic over [`Real`], which
//! bundles the float operations the machinery needs on top of
//! [`num_traits::Float`]. `f64` is the working precision of every shipped
//! tool; `f32` is exercised in tests to keep the abstraction honest.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// The conversion helpers are "lossy" in the sense that narrowing from `f64`
/// rounds to nearest; for `f64` itself they are exact. Domain indices are
/// always `u64` and only converted to `Real` for mass arithmetic.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + core::ops::AddAssign
    + core::ops::SubAssign
    + core::ops::MulAssign
    + core::ops::DivAssign
    + core::iter::Sum<Self>
    + core::fmt::Debug
    + core::fmt::Display
    + serde::Serialize
    + serde::de::DeserializeOwned
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    fn from_index(i: u64) -> Self {
        Self::from_u64(i).expect("index converts to Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
