//! Closed-form optimal strategies and adversarial migration: the saddle
//! values `chi` and `omega`, the optimal susceptible distributions `pi*` and
//! `pi~`, the adversarial infective pattern `Q*`, epsilon-saddle
//! distributions, and border-control admittance probabilities.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{GeneratorMatrix, ModelParams, SimplexPoint};
use crate::scalar::Scalar;
use crate::tol;

/// `chi(beta, gamma) = (1 - sum_j gamma_j/beta_j) / sum_j beta_j^-1`,
/// the saddle value of the growth rate `tau`.
pub fn chi<S: Scalar>(params: &ModelParams<S>) -> S {
    let mut ratio_sum = S::zero();
    let mut inv_sum = S::zero();
    for i in 0..params.m() {
        ratio_sum = ratio_sum + params.gamma()[i] / params.beta()[i];
        inv_sum = inv_sum + S::one() / params.beta()[i];
    }
    (S::one() - ratio_sum) / inv_sum
}

/// `omega(beta, gamma) = (sum_j gamma_j/beta_j)^-1`, the saddle value of
/// `R0`. Undefined when every recovery rate vanishes.
pub fn omega<S: Scalar>(params: &ModelParams<S>) -> Result<S> {
    let mut ratio_sum = S::zero();
    for i in 0..params.m() {
        ratio_sum = ratio_sum + params.gamma()[i] / params.beta()[i];
    }
    if ratio_sum == S::zero() {
        return Err(Error::AllRecoveryZero);
    }
    Ok(S::one() / ratio_sum)
}

/// Outcome of the `tau`-optimal construction `pi*_i = (gamma_i + chi)/beta_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum TauOptimalPi<S> {
    /// All groups satisfy `gamma_i > -chi`; `pi*` is interior.
    Interior(SimplexPoint<S>),
    /// Some groups sit exactly on `gamma_i = -chi` (within `1e-12`); their
    /// entries are exact zeros and only epsilon-saddle points exist.
    Boundary {
        pi: SimplexPoint<S>,
        zero_groups: Vec<usize>,
    },
    /// Some group has `gamma_i < -chi`; no optimal distribution exists in
    /// closed form and the minimax search takes over.
    ConditionViolated { failing_groups: Vec<usize> },
}

impl<S> TauOptimalPi<S> {
    /// The distribution, when one exists (interior or boundary case).
    pub fn point(&self) -> Option<&SimplexPoint<S>> {
        match self {
            TauOptimalPi::Interior(pi) => Some(pi),
            TauOptimalPi::Boundary { pi, .. } => Some(pi),
            TauOptimalPi::ConditionViolated { .. } => None,
        }
    }
}

/// The `tau`-optimal susceptible distribution of the growth-rate saddle,
/// classified against the condition `gamma_i > -chi` with a `1e-12` margin.
pub fn tau_optimal_pi<S: Scalar>(params: &ModelParams<S>) -> TauOptimalPi<S> {
    let c = chi(params);
    let margin = tol::widened::<S>(tol::CONDITION_MARGIN);
    let mut zero_groups = Vec::new();
    let mut failing_groups = Vec::new();
    for i in 0..params.m() {
        let slack = params.gamma()[i] + c;
        if slack < -margin {
            failing_groups.push(i);
        } else if slack <= margin {
            zero_groups.push(i);
        }
    }
    if !failing_groups.is_empty() {
        return TauOptimalPi::ConditionViolated { failing_groups };
    }
    let mut raw: Vec<S> = (0..params.m())
        .map(|i| (params.gamma()[i] + c) / params.beta()[i])
        .collect();
    if zero_groups.is_empty() {
        // sums to one algebraically; the formula forces it
        let pi = SimplexPoint::new(raw).expect("pi* sums to one by construction");
        TauOptimalPi::Interior(pi)
    } else {
        for &i in &zero_groups {
            raw[i] = S::zero();
        }
        let pi = SimplexPoint::normalized(raw).expect("boundary pi* has positive mass");
        TauOptimalPi::Boundary { pi, zero_groups }
    }
}

/// An epsilon-saddle distribution together with the raw (unnormalized)
/// vector `(gamma_i + eps + chi)/beta_i`, which sums to
/// `1 + eps * sum_j beta_j^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSaddle<S> {
    pub pi: SimplexPoint<S>,
    pub unnormalized: Array1<S>,
}

/// The epsilon-saddle distribution `pi^eps`, defined whenever
/// `gamma_i >= -chi` for all groups. Entries are strictly positive for any
/// `eps > 0`, so boundary-condition models still get an interior strategy.
pub fn epsilon_saddle_pi<S: Scalar>(params: &ModelParams<S>, eps: S) -> Result<EpsilonSaddle<S>> {
    if !(eps > S::zero()) {
        return Err(Error::InvalidArgument {
            reason: format!("eps must be positive, got {eps:e}"),
        });
    }
    let c = chi(params);
    let margin = tol::widened::<S>(tol::CONDITION_MARGIN);
    for i in 0..params.m() {
        if params.gamma()[i] + c < -margin {
            return Err(Error::ConditionViolated { index: i });
        }
    }
    let raw: Vec<S> = (0..params.m())
        .map(|i| ((params.gamma()[i] + c).max(S::zero()) + eps) / params.beta()[i])
        .collect();
    let unnormalized = Array1::from_vec(raw.clone());
    let pi = SimplexPoint::normalized(raw)?;
    Ok(EpsilonSaddle { pi, unnormalized })
}

/// The `R0`-optimal susceptible distribution
/// `pi~_i = (gamma_i / beta_i) * omega`. Requires every `gamma_i > 0`;
/// otherwise the optimum sits on the simplex boundary and is reported as
/// such rather than guessed around.
pub fn r0_optimal_pi<S: Scalar>(params: &ModelParams<S>) -> Result<SimplexPoint<S>> {
    for i in 0..params.m() {
        if params.gamma()[i] == S::zero() {
            return Err(Error::ZeroRecoveryGroup { index: i });
        }
    }
    let w = omega(params)?;
    let raw: Vec<S> = (0..params.m())
        .map(|i| params.gamma()[i] / params.beta()[i] * w)
        .collect();
    SimplexPoint::new(raw)
}

/// The adversarial infective migration pattern with off-diagonal entries
/// `scale / beta_j`. Its stationary distribution is proportional to
/// `1/beta_i` for any positive scale. For `m = 1` this is the zero
/// generator.
pub fn adversarial_q<S: Scalar>(params: &ModelParams<S>, scale: S) -> Result<GeneratorMatrix<S>> {
    if !(scale > S::zero()) {
        return Err(Error::InvalidArgument {
            reason: format!("scale must be positive, got {scale:e}"),
        });
    }
    let m = params.m();
    if m == 1 {
        return Ok(GeneratorMatrix::zero(1));
    }
    let mut off = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            if i != j {
                off[[i, j]] = scale / params.beta()[j];
            }
        }
    }
    GeneratorMatrix::from_off_diagonal(off)
}

/// Admittance probabilities implementing border controls, together with the
/// controlled generator and any one-way edges that had to be closed.
#[derive(Debug, Clone, PartialEq)]
pub struct BorderControls<S> {
    /// Admittance probability for a migrant moving `i -> j` (diagonal unused
    /// and set to one).
    pub admittance: Array2<S>,
    /// The controlled generator `R'_ij = R_ij p_ij`; reversible with
    /// stationary distribution `target`.
    pub modified: GeneratorMatrix<S>,
    /// Ordered pairs `(i, j)` with `R_ij > 0` but `R_ji = 0`, whose live
    /// direction was closed because detailed balance cannot hold on them.
    pub one_way_edges: Vec<(usize, usize)>,
}

/// Detailed-balance border controls steering the stationary law of `r`
/// to `target`: for each two-way pair, `p_ij = min(1, R_ji t_j / (R_ij t_i))`
/// so the less restrictive scale is chosen and one direction stays fully
/// open.
pub fn border_controls<S: Scalar>(
    r: &GeneratorMatrix<S>,
    target: &SimplexPoint<S>,
) -> Result<BorderControls<S>> {
    if !r.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if !target.is_interior() {
        return Err(Error::InvalidArgument {
            reason: "border-control target must be interior".into(),
        });
    }
    let m = r.m();
    if target.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: target.m(),
        });
    }
    let mut admittance = Array2::ones((m, m));
    let mut one_way_edges = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let fwd = r.rates()[[i, j]];
            let bwd = r.rates()[[j, i]];
            let flow_fwd = fwd * target.probs()[i];
            let flow_bwd = bwd * target.probs()[j];
            if fwd > S::zero() && bwd > S::zero() {
                admittance[[i, j]] = (flow_bwd / flow_fwd).min(S::one());
                admittance[[j, i]] = (flow_fwd / flow_bwd).min(S::one());
            } else if fwd > S::zero() {
                admittance[[i, j]] = S::zero();
                one_way_edges.push((i, j));
            } else if bwd > S::zero() {
                admittance[[j, i]] = S::zero();
                one_way_edges.push((j, i));
            }
        }
    }
    let mut controlled = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            if i != j {
                controlled[[i, j]] = r.rates()[[i, j]] * admittance[[i, j]];
            }
        }
    }
    let modified = GeneratorMatrix::from_off_diagonal(controlled)?;
    if !modified.is_irreducible() {
        return Err(Error::IrreducibilityLost);
    }
    Ok(BorderControls {
        admittance,
        modified,
        one_way_edges,
    })
}

/// Summary of the closed-form strategies for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport<S> {
    pub chi: S,
    /// `None` when every recovery rate is zero.
    pub omega: Option<S>,
    /// True when `gamma_i > -chi` holds strictly for every group.
    pub condition_ok: bool,
    /// Groups with `gamma_i = -chi` within `1e-12`.
    pub boundary_groups: Vec<usize>,
    /// `None` when the condition is violated outright.
    pub tau_optimal_pi: Option<SimplexPoint<S>>,
    /// `None` when some recovery rate is zero.
    pub r0_optimal_pi: Option<SimplexPoint<S>>,
    pub adversarial_q: GeneratorMatrix<S>,
}

/// Assembles the closed-form strategy summary.
pub fn strategy_report<S: Scalar>(params: &ModelParams<S>) -> StrategyReport<S> {
    let tau_opt = tau_optimal_pi(params);
    let (condition_ok, boundary_groups, tau_pi) = match tau_opt {
        TauOptimalPi::Interior(pi) => (true, Vec::new(), Some(pi)),
        TauOptimalPi::Boundary { pi, zero_groups } => (false, zero_groups, Some(pi)),
        TauOptimalPi::ConditionViolated { .. } => (false, Vec::new(), None),
    };
    StrategyReport {
        chi: chi(params),
        omega: omega(params).ok(),
        condition_ok,
        boundary_groups,
        tau_optimal_pi: tau_pi,
        r0_optimal_pi: r0_optimal_pi(params).ok(),
        adversarial_q: adversarial_q(params, S::one()).expect("unit scale is positive"),
    }
}
