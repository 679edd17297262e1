//! Exact outcome functionals of the branching process: offspring
//! probability generating function, extinction probabilities, and expected
//! total epidemic size.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{GeneratorMatrix, InfectiveState, ModelParams, SimplexPoint};
use crate::scalar::{real, Scalar};
use crate::spectral;
use crate::tol;

/// Expected total size per starting group, or infinite when the
/// next-generation matrix is (near-)critical.
#[derive(Debug, Clone, PartialEq)]
pub enum TotalSize<S> {
    /// `(I - Lambda)^-1 1`, entrywise at least one.
    Finite(Array1<S>),
    /// `rho(Lambda) >= 1 - 1e-10`; the Neumann series diverges.
    Infinite { spectral_radius: S },
}

/// Extinction and total-size summary for a `(pi, Q)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeReport<S> {
    /// Extinction probability by starting group.
    pub q: Array1<S>,
    pub total_size: TotalSize<S>,
    /// True when `tau(pi, Q) > 0`.
    pub supercritical: bool,
}

fn offspring_denominators<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<Array1<S>> {
    let m = params.m();
    if pi.m() != m || q.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: pi.m().max(q.m()),
        });
    }
    let mut den = Array1::zeros(m);
    for i in 0..m {
        let mut out_rate = S::zero();
        for j in 0..m {
            if j != i {
                out_rate = out_rate + q.rates()[[i, j]];
            }
        }
        let d = out_rate + params.beta()[i] * pi.probs()[i] + params.gamma()[i];
        if !(d > S::zero()) {
            return Err(Error::DegenerateGroup { index: i });
        }
        den[i] = d;
    }
    Ok(den)
}

/// Offspring probability generating function
/// `g_i(u) = (sum_{j != i} Q_ij u_j + beta_i pi_i u_i^2 + gamma_i) / d_i`
/// with `d_i = sum_{j != i} Q_ij + beta_i pi_i + gamma_i`.
pub fn pgf_eval<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    u: &Array1<S>,
) -> Result<Array1<S>> {
    if u.len() != params.m() {
        return Err(Error::DimensionMismatch {
            expected: params.m(),
            got: u.len(),
        });
    }
    for (i, &ui) in u.iter().enumerate() {
        if !(ui >= S::zero() && ui <= S::one()) {
            return Err(Error::InvalidArgument {
                reason: format!("u[{i}] = {ui:e} is outside [0, 1]"),
            });
        }
    }
    let den = offspring_denominators(params, pi, q)?;
    let mut out = Array1::zeros(params.m());
    pgf_apply(params, pi, q, &den, u, &mut out);
    Ok(out)
}

fn pgf_apply<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    den: &Array1<S>,
    u: &Array1<S>,
    out: &mut Array1<S>,
) {
    let m = params.m();
    for i in 0..m {
        let mut acc = params.beta()[i] * pi.probs()[i] * u[i] * u[i] + params.gamma()[i];
        for j in 0..m {
            if j != i {
                acc = acc + q.rates()[[i, j]] * u[j];
            }
        }
        out[i] = acc / den[i];
    }
}

/// Extinction probabilities by starting group: the smallest fixed point of
/// the offspring PGF in `[0, 1]^m`, computed by the monotone iteration
/// `u_0 = 0`, `u_{k+1} = g(u_k)`.
pub fn extinction_probs<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<Array1<S>> {
    if !q.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let den = offspring_denominators(params, pi, q)?;
    let m = params.m();
    let mut current: Array1<S> = Array1::zeros(m);
    let mut next: Array1<S> = Array1::zeros(m);
    let step_tol = tol::widened::<S>(tol::FIXED_POINT_STEP);
    for _ in 0..tol::FIXED_POINT_MAX_ITER {
        pgf_apply(params, pi, q, &den, &current, &mut next);
        let mut step = S::zero();
        for i in 0..m {
            step = step.max((next[i] - current[i]).abs());
        }
        std::mem::swap(&mut current, &mut next);
        if step < step_tol {
            return Ok(current);
        }
    }
    Err(Error::FixedPointNoConvergence {
        iterations: tol::FIXED_POINT_MAX_ITER,
        lower_bound: current.iter().map(|x| x.as_f64()).collect(),
    })
}

/// Probability that the epidemic started from `y0` dies out in finite time:
/// `prod_i q_i^{y0_i}`.
pub fn extinction_prob_from_state<S: Scalar>(q: &Array1<S>, y0: &InfectiveState) -> S {
    assert_eq!(q.len(), y0.m(), "state length must match q");
    let mut p = S::one();
    for (i, &count) in y0.counts().iter().enumerate() {
        p = p * q[i].powi(count as i32);
    }
    p
}

/// Expected total size `E(sum_j T_ij)` per starting group `i`: the row sums
/// of the Neumann series of `Lambda`, i.e. `(I - Lambda)^-1 1` when
/// `rho(Lambda) < 1 - 1e-10` and infinite otherwise.
pub fn expected_total_size<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<TotalSize<S>> {
    let lambda = spectral::build_lambda(params, pi, q)?;
    let rho = spectral::r0(params, pi, q)?;
    if rho >= S::one() - real(tol::CRITICAL_BAND) {
        return Ok(TotalSize::Infinite {
            spectral_radius: rho,
        });
    }
    let m = params.m();
    let mut system: Array2<S> = Array2::eye(m);
    system.scaled_add(-S::one(), &lambda);
    let ones = Array1::ones(m);
    let x = linalg::factor(&system)?.solve(ones.view());
    Ok(TotalSize::Finite(x))
}

/// Assembles extinction probabilities, total size, and the criticality flag.
pub fn outcome_report<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<OutcomeReport<S>> {
    let ext = extinction_probs(params, pi, q)?;
    let total_size = expected_total_size(params, pi, q)?;
    let growth = spectral::tau(params, pi, q)?;
    Ok(OutcomeReport {
        q: ext,
        total_size,
        supercritical: growth > S::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn params(beta: &[f64], gamma: &[f64]) -> ModelParams<f64> {
        ModelParams::new(beta.to_vec(), gamma.to_vec()).unwrap()
    }

    fn simplex(p: &[f64]) -> SimplexPoint<f64> {
        SimplexPoint::new(p.to_vec()).unwrap()
    }

    fn generator(rates: Array2<f64>) -> GeneratorMatrix<f64> {
        GeneratorMatrix::new(rates).unwrap()
    }

    #[test]
    fn pgf_fixes_the_all_ones_vector() {
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        let q = generator(array![[-1.0, 1.0], [2.0, -2.0]]);
        let g = pgf_eval(&p, &pi, &q, &array![1.0, 1.0]).unwrap();
        assert_relative_eq!(g[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(g[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pgf_scalar_hand_value() {
        let p = params(&[2.0], &[1.0]);
        let pi = simplex(&[1.0]);
        let g = pgf_eval(&p, &pi, &GeneratorMatrix::zero(1), &array![0.0]).unwrap();
        assert_relative_eq!(g[0], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn pgf_fixes_one_over_omega_at_pi_tilde() {
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        let q = generator(array![[-3.0, 3.0], [0.4, -0.4]]);
        let u = array![0.75, 0.75];
        let g = pgf_eval(&p, &pi, &q, &u).unwrap();
        assert_relative_eq!(g[0], 0.75, epsilon = 1e-14);
        assert_relative_eq!(g[1], 0.75, epsilon = 1e-14);
    }

    #[test]
    fn pgf_rejects_degenerate_groups_and_bad_u() {
        let p = ModelParams::new_unchecked(vec![1.0, 1.0], vec![0.0, 1.0]);
        let pi = simplex(&[0.0, 1.0]);
        let q = GeneratorMatrix::zero(2);
        // group 0: no migration, no infection (pi_0 = 0), no recovery
        assert!(matches!(
            pgf_eval(&p, &pi, &q, &array![0.5, 0.5]).unwrap_err(),
            Error::DegenerateGroup { index: 0 }
        ));
        let p = params(&[1.0, 1.0], &[1.0, 1.0]);
        assert!(pgf_eval(&p, &simplex(&[0.5, 0.5]), &q, &array![1.5, 0.0]).is_err());
    }

    #[test]
    fn pgf_is_monotone_in_u() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let p = params(&[1.0, 2.0], &[0.5, 0.25]);
        let pi = simplex(&[0.4, 0.6]);
        let q = generator(array![[-0.7, 0.7], [1.3, -1.3]]);
        for _ in 0..100 {
            let a = array![rng.random::<f64>(), rng.random::<f64>()];
            let delta = array![
                rng.random::<f64>() * (1.0 - a[0]),
                rng.random::<f64>() * (1.0 - a[1])
            ];
            let b = &a + &delta;
            let ga = pgf_eval(&p, &pi, &q, &a).unwrap();
            let gb = pgf_eval(&p, &pi, &q, &b).unwrap();
            assert!(ga[0] <= gb[0] + 1e-15 && ga[1] <= gb[1] + 1e-15);
        }
    }

    #[test]
    fn extinction_scalar_case_is_one_half() {
        let p = params(&[2.0], &[1.0]);
        let pi = simplex(&[1.0]);
        let q = extinction_probs(&p, &pi, &GeneratorMatrix::zero(1)).unwrap();
        assert_relative_eq!(q[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn extinction_at_pi_tilde_is_inverse_omega() {
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        for q_mat in [
            generator(array![[-1.0, 1.0], [2.0, -2.0]]),
            generator(array![[-0.3, 0.3], [4.0, -4.0]]),
        ] {
            let q = extinction_probs(&p, &pi, &q_mat).unwrap();
            assert_relative_eq!(q[0], 0.75, epsilon = 1e-10);
            assert_relative_eq!(q[1], 0.75, epsilon = 1e-10);
        }
    }

    #[test]
    fn extinction_is_certain_in_the_subcritical_case() {
        let p = params(&[2.0, 4.0], &[2.0, 2.0]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        let q_mat = generator(array![[-1.0, 1.0], [2.0, -2.0]]);
        let q = extinction_probs(&p, &pi, &q_mat).unwrap();
        assert_relative_eq!(q[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(q[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extinction_fixed_point_residual_is_tiny() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(13);
        for _ in 0..50 {
            let m = rng.random_range(1..4);
            let beta: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..4.0)).collect();
            let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..3.0)).collect();
            let p = ModelParams::new(beta, gamma).unwrap();
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let pi = SimplexPoint::normalized(raw).unwrap();
            let q_mat = if m == 1 {
                GeneratorMatrix::zero(1)
            } else {
                let off = Array2::from_shape_fn((m, m), |_| rng.random_range(0.1..3.0));
                GeneratorMatrix::from_off_diagonal(off).unwrap()
            };
            let t = spectral::tau(&p, &pi, &q_mat).unwrap();
            if t.abs() < 0.05 {
                continue; // stay away from the critical slowdown
            }
            let q = extinction_probs(&p, &pi, &q_mat).unwrap();
            let g = pgf_eval(&p, &pi, &q_mat, &q).unwrap();
            for i in 0..m {
                assert!((g[i] - q[i]).abs() < 1e-12);
            }
            // Contraction factor of the PGF at the fixed point bounds the
            // halting error of the iteration: heavy migration slows the
            // sweep without moving the threshold, so the tight tolerance
            // only applies when the contraction is certified.
            let contraction = (0..m)
                .map(|i| {
                    let delta: f64 = (0..m)
                        .filter(|&j| j != i)
                        .map(|j| q_mat.rates()[[i, j]])
                        .sum();
                    let d = delta + p.beta()[i] * pi.probs()[i] + p.gamma()[i];
                    (delta + 2.0 * p.beta()[i] * pi.probs()[i] * q[i]) / d
                })
                .fold(0.0f64, f64::max);
            // threshold coupling
            if t > 0.0 {
                assert!(q.iter().all(|&x| x < 1.0 - 1e-8));
            } else if contraction < 0.9 {
                assert!(q.iter().all(|&x| (x - 1.0).abs() < 1e-12));
            } else {
                assert!(q.iter().all(|&x| (x - 1.0).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn extinction_from_state_products() {
        let q = array![0.75, 0.75];
        assert_eq!(
            extinction_prob_from_state(&q, &InfectiveState::new(vec![0, 0])),
            1.0
        );
        assert_relative_eq!(
            extinction_prob_from_state(&q, &InfectiveState::new(vec![2, 1])),
            0.421875,
            epsilon = 1e-15
        );
        let ones = array![1.0, 1.0];
        assert_eq!(
            extinction_prob_from_state(&ones, &InfectiveState::new(vec![5, 9])),
            1.0
        );
    }

    #[test]
    fn total_size_matches_theorem_value() {
        let p = params(&[2.0, 4.0], &[2.0, 2.0]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        for q_mat in [
            generator(array![[-1.0, 1.0], [2.0, -2.0]]),
            generator(array![[-0.25, 0.25], [3.0, -3.0]]),
        ] {
            match expected_total_size(&p, &pi, &q_mat).unwrap() {
                TotalSize::Finite(x) => {
                    assert_relative_eq!(x[0], 3.0, epsilon = 1e-10);
                    assert_relative_eq!(x[1], 3.0, epsilon = 1e-10);
                }
                other => panic!("expected finite size, got {other:?}"),
            }
        }
    }

    #[test]
    fn total_size_scalar_geometric_series() {
        let p = params(&[1.0], &[2.0]);
        let pi = simplex(&[1.0]);
        match expected_total_size(&p, &pi, &GeneratorMatrix::zero(1)).unwrap() {
            TotalSize::Finite(x) => assert_relative_eq!(x[0], 2.0, epsilon = 1e-12),
            other => panic!("expected finite size, got {other:?}"),
        }
    }

    #[test]
    fn total_size_is_infinite_in_the_supercritical_case() {
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        let q_mat = generator(array![[-1.0, 1.0], [2.0, -2.0]]);
        match expected_total_size(&p, &pi, &q_mat).unwrap() {
            TotalSize::Infinite { spectral_radius } => {
                assert_relative_eq!(spectral_radius, 4.0 / 3.0, epsilon = 1e-9);
            }
            other => panic!("expected infinite size, got {other:?}"),
        }
    }

    #[test]
    fn finite_total_size_entries_are_at_least_one() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(19);
        for _ in 0..50 {
            let m = rng.random_range(1..4);
            let beta: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..2.0)).collect();
            let gamma: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..5.0)).collect();
            let p = ModelParams::new(beta, gamma).unwrap();
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
            let pi = SimplexPoint::normalized(raw).unwrap();
            let q_mat = if m == 1 {
                GeneratorMatrix::zero(1)
            } else {
                let off = Array2::from_shape_fn((m, m), |_| rng.random_range(0.1..3.0));
                GeneratorMatrix::from_off_diagonal(off).unwrap()
            };
            if let TotalSize::Finite(x) = expected_total_size(&p, &pi, &q_mat).unwrap() {
                assert!(x.iter().all(|&v| v >= 1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn theorem3_desk_scale_bound_for_slow_migration() {
        // omega > 1; Q^eps is the adversarial pattern scaled so that
        // sum_i delta_i / beta_i < eps
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let w = crate::strategies::omega(&p).unwrap();
        assert!(w > 1.0);
        let eps = 0.05;
        let scale = 0.01; // delta_i = scale * sum_{j != i} 1/beta_j
        let q_eps = crate::strategies::adversarial_q(&p, scale).unwrap();
        let delta_budget: f64 = (0..2)
            .map(|i| {
                let out: f64 = (0..2)
                    .filter(|&j| j != i)
                    .map(|j| q_eps.rates()[[i, j]])
                    .sum();
                out / p.beta()[i]
            })
            .sum();
        assert!(delta_budget < eps);
        for step in 1..10 {
            let p1 = step as f64 / 10.0;
            let pi = simplex(&[p1, 1.0 - p1]);
            let q = extinction_probs(&p, &pi, &q_eps).unwrap();
            let min_q = q.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min_q - eps <= 1.0 / w + 1e-12, "pi1 = {p1}, min q = {min_q}");
        }
    }

    #[test]
    fn theorem4_desk_scale_bound_for_slow_migration() {
        // omega < 1; Q^eps = delta (1 1^T - m I) with
        // 0 < delta m sum gamma_i^-1 < eps (1 - omega)(1/omega - 1)
        let p = params(&[2.0, 4.0], &[2.0, 2.0]);
        let w = crate::strategies::omega(&p).unwrap();
        assert!(w < 1.0);
        let eps = 0.05;
        let m = 2.0;
        let inv_gamma_sum = 1.0;
        let bound = eps * (1.0 - w) * (1.0 / w - 1.0);
        let delta = 0.4 * bound / (m * inv_gamma_sum);
        assert!(delta * m * inv_gamma_sum < bound && delta > 0.0);
        let q_eps = generator(array![[-delta, delta], [delta, -delta]]);
        for step in 1..10 {
            let p1 = step as f64 / 10.0;
            let pi = simplex(&[p1, 1.0 - p1]);
            let max_size = match expected_total_size(&p, &pi, &q_eps).unwrap() {
                TotalSize::Finite(x) => x.iter().cloned().fold(0.0, f64::max),
                TotalSize::Infinite { .. } => f64::INFINITY,
            };
            assert!(
                max_size + eps >= 1.0 / (1.0 - w) - 1e-12,
                "pi1 = {p1}, max size = {max_size}"
            );
        }
    }

    #[test]
    fn report_classifies_criticality() {
        let p = params(&[1.0, 2.0], &[0.5, 0.5]);
        let pi = simplex(&[2.0 / 3.0, 1.0 / 3.0]);
        let q_mat = generator(array![[-1.0, 1.0], [2.0, -2.0]]);
        let report = outcome_report(&p, &pi, &q_mat).unwrap();
        assert!(report.supercritical);
        assert!(report.q.iter().all(|&x| x < 1.0));
        assert!(matches!(report.total_size, TotalSize::Infinite { .. }));
    }
}
