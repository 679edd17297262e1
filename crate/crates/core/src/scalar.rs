//! Floating-point abstraction for the numerical kernels.

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive};

/// Floating-point scalar type the library is generic over.
///
/// `f32` and `f64` both implement it; `f64` is the working precision used by
/// the CLI and by the crate-root aliases. The stated tolerances assume `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ScalarOperand
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy round-trip to `f64`, used for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant (tolerance, default, literal) into `S`.
#[inline]
pub fn real<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("constant representable in every supported scalar")
}
