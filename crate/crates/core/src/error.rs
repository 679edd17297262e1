//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("beta[{index}] must be strictly positive, got {value}")]
    NonPositiveBeta { index: usize, value: f64 },

    #[error("gamma[{index}] must be nonnegative, got {value}")]
    NegativeGamma { index: usize, value: f64 },

    #[error("parameter vectors disagree in length ({beta_len} vs {gamma_len})")]
    LengthMismatch { beta_len: usize, gamma_len: usize },

    #[error("malformed generator matrix: {reason}")]
    MalformedGenerator { reason: String },

    #[error("migration matrix is not irreducible")]
    NotIrreducible,

    #[error("invalid probability vector: {reason}")]
    InvalidSimplexPoint { reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },

    #[error("iteration budget exhausted after {iterations} steps (best estimate {estimate:e})")]
    NoConvergence { iterations: u64, estimate: f64 },

    #[error(
        "fixed-point iteration exhausted after {iterations} steps; \
         the last iterate is a certified lower bound on the extinction probabilities"
    )]
    FixedPointNoConvergence {
        iterations: u64,
        lower_bound: Vec<f64>,
    },

    #[error("diag(gamma) - Q is numerically singular")]
    SingularResidenceMatrix,

    #[error("all recovery rates are zero; omega is undefined")]
    AllRecoveryZero,

    #[error("gamma[{index}] is zero; the R0-optimal distribution lies on the simplex boundary")]
    ZeroRecoveryGroup { index: usize },

    #[error("gamma[{index}] < -chi: the tau-optimal distribution does not exist")]
    ConditionViolated { index: usize },

    #[error("group {index} has no events (migration, infection and recovery rates all vanish)")]
    DegenerateGroup { index: usize },

    #[error("admittance controls disconnect the migration graph")]
    IrreducibilityLost,

    #[error("linear system is numerically singular")]
    SingularMatrix,

    #[error("ODE step size underflow at t = {t:e}")]
    StepSizeUnderflow { t: f64 },

    #[error("QR eigenvalue iteration failed to converge")]
    EigenvalueFailure,
}

pub type Result<T> = std::result::Result<T, Error>;
