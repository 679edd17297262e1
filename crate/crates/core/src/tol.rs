//! Numerical tolerances used throughout the crate.
//!
//! Everything is stated for `f64` working precision. The simplex and
//! generator constants are absolute; eigenvalue residuals are relative to the
//! infinity norm of the matrix at hand.

/// Absolute tolerance on `|sum(pi) - 1|` for a probability vector.
pub const SIMPLEX_SUM: f64 = 1e-12;

/// Entries at or above this value count as interior simplex coordinates.
pub const SIMPLEX_INTERIOR: f64 = 1e-12;

/// Absolute tolerance on generator row sums.
pub const GENERATOR_ROW_SUM: f64 = 1e-12;

/// Relative tolerance on the dominant-eigenvalue estimate in power iteration.
pub const EIG_VALUE_REL: f64 = 1e-12;

/// Eigenvector residual acceptance, relative to the matrix infinity norm.
pub const EIG_RESIDUAL_REL: f64 = 1e-10;

/// Iteration budget for power iteration.
pub const EIG_MAX_ITER: u64 = 100_000;

/// Infinity-norm residual accepted for a stationary distribution.
pub const STATIONARY_RESIDUAL: f64 = 1e-10;

/// Sup-norm step below which the extinction fixed-point iteration stops.
pub const FIXED_POINT_STEP: f64 = 1e-13;

/// Iteration budget for the extinction fixed-point iteration.
pub const FIXED_POINT_MAX_ITER: u64 = 10_000_000;

/// Width of the band around `rho(Lambda) = 1` classified as infinite size.
pub const CRITICAL_BAND: f64 = 1e-10;

/// Margin separating interior, boundary, and violated condition cases.
pub const CONDITION_MARGIN: f64 = 1e-12;

/// Poisson tail mass dropped when truncating the uniformization series.
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;

use crate::scalar::{real, Scalar};

/// Widens a stated `f64` tolerance so it stays meaningful in lower
/// precision: the stated value, floored at a few machine epsilons of `S`.
/// At `f64` this returns the stated value unchanged.
pub fn widened<S: Scalar>(stated: f64) -> S {
    real::<S>(stated).max(S::epsilon() * real(8.0))
}
