//! Shared oracles and deterministic instance generators for the
//! integration and acceptance suites.
//!
//! The closed-form two-group eigenvalue routes below are independent of the
//! library's power-iteration path and serve as its cross-check.

use epimm_core::model::{GeneratorMatrix, ModelParams, SimplexPoint};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Dominant eigenvalue of the two-group mean generator
/// `[[b1 p1 - g1 - a, a], [b, b2 p2 - g2 - b]]` by the quadratic formula.
pub fn tau_two_group_closed_form(
    beta: (f64, f64),
    gamma: (f64, f64),
    pi1: f64,
    a: f64,
    b: f64,
) -> f64 {
    let a11 = beta.0 * pi1 - gamma.0 - a;
    let a22 = beta.1 * (1.0 - pi1) - gamma.1 - b;
    let half_diff = 0.5 * (a11 - a22);
    0.5 * (a11 + a22) + (half_diff * half_diff + a * b).sqrt()
}

/// Spectral radius of the two-group next-generation matrix
/// `(diag(gamma) - Q)^-1 diag(beta pi)` by the quadratic formula.
pub fn r0_two_group_closed_form(
    beta: (f64, f64),
    gamma: (f64, f64),
    pi1: f64,
    a: f64,
    b: f64,
) -> f64 {
    // (diag(gamma) - Q) = [[g1 + a, -a], [-b, g2 + b]]
    let det = (gamma.0 + a) * (gamma.1 + b) - a * b;
    let bp1 = beta.0 * pi1;
    let bp2 = beta.1 * (1.0 - pi1);
    // Lambda = 1/det [[ (g2 + b) bp1, a bp2 ], [ b bp1, (g1 + a) bp2 ]]
    let trace = ((gamma.1 + b) * bp1 + (gamma.0 + a) * bp2) / det;
    let lam_det = bp1 * bp2 / det;
    0.5 * trace + (0.25 * trace * trace - lam_det).max(0.0).sqrt()
}

/// Irreducible generator with log-uniform off-diagonal rates.
pub fn random_generator(rng: &mut ChaCha12Rng, m: usize, lo: f64, hi: f64) -> GeneratorMatrix<f64> {
    if m == 1 {
        return GeneratorMatrix::zero(1);
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let off = Array2::from_shape_fn((m, m), |_| rng.random_range(log_lo..log_hi).exp());
    GeneratorMatrix::from_off_diagonal(off).expect("positive rates form a generator")
}

/// Interior point with entries bounded away from the boundary.
pub fn random_interior_pi(rng: &mut ChaCha12Rng, m: usize, floor: f64) -> SimplexPoint<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(floor..1.0)).collect();
    SimplexPoint::normalized(raw).expect("positive entries")
}

pub fn random_params(rng: &mut ChaCha12Rng, m: usize) -> ModelParams<f64> {
    let beta: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..4.0)).collect();
    let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..4.0)).collect();
    ModelParams::new(beta, gamma).expect("valid ranges")
}
