//! Minimax control of epidemic spread in metapopulations.
//!
//! A closed population is split into `m` groups coupled by migration.
//! Susceptible individuals distribute themselves according to a probability
//! vector `pi` (the stationary law of their migration matrix `R`), infective
//! individuals migrate according to a rate matrix `Q`, and the early epidemic
//! is approximated by a multi-type branching process. This crate computes
//!
//! - the expected growth rate `tau(pi, Q)` (dominant eigenvalue of the mean
//!   generator) and the basic reproduction number `R0(pi, Q)` (spectral
//!   radius of the next-generation matrix),
//! - the closed-form optimal susceptible distributions and the adversarial
//!   infective migration pattern, together with the saddle values `chi` and
//!   `omega`,
//! - extinction probabilities and expected total epidemic size,
//! - nested minimax searches `inf_pi sup_Q` / `sup_Q inf_pi` over a boxed
//!   search region,
//! - exact-event stochastic simulation of the branching process and of the
//!   finite-population Markov chain, and
//! - the deterministic (ODE) metapopulation models with their disease-free
//!   equilibrium spectra and next-generation matrices.
//!
//! All numerical kernels are generic over the floating-point type through
//! [`Scalar`]; concrete `f64` aliases live at the crate root.

pub mod error;
pub mod linalg;
pub mod minimax;
pub mod model;
pub mod ode;
pub mod outcomes;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod strategies;
pub mod tol;

pub use error::{Error, Result};
pub use scalar::{real, Scalar};

/// Model parameters at working precision.
pub type ModelParamsF64 = model::ModelParams<f64>;
/// Probability vector over groups at working precision.
pub type SimplexPointF64 = model::SimplexPoint<f64>;
/// Migration rate matrix at working precision.
pub type GeneratorMatrixF64 = model::GeneratorMatrix<f64>;
/// Metzler mean-generator matrix at working precision.
pub type MetzlerMatrixF64 = spectral::MetzlerMatrix<f64>;
/// Dominant eigenvalue with left/right eigenvectors at working precision.
pub type SpectralPairF64 = spectral::SpectralPair<f64>;
/// Closed-form strategy summary at working precision.
pub type StrategyReportF64 = strategies::StrategyReport<f64>;
/// Extinction/total-size summary at working precision.
pub type OutcomeReportF64 = outcomes::OutcomeReport<f64>;
/// Minimax search box at working precision.
pub type SearchBoxF64 = minimax::SearchBox<f64>;
/// Combined minimax result at working precision.
pub type MinimaxResultF64 = minimax::MinimaxResult<f64>;
