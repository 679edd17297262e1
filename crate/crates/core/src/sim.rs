//! Exact-event stochastic simulation of the branching process and of the
//! finite-population metapopulation chain, with Monte Carlo estimators.
//!
//! Reproducibility: every replicate owns an independent ChaCha stream derived
//! from a single seed and the replicate index, so results are bit-identical
//! regardless of how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, GeneratorMatrix, InfectiveState, ModelParams, SimplexPoint};
use crate::scalar::{real, Scalar};

/// Replication settings shared by the Monte Carlo estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<S> {
    pub seed: u64,
    pub replicates: u64,
    /// Once this many individuals have ever been infected the run is
    /// classified as a major outbreak and stopped.
    pub extinction_cap: u64,
    /// Wall-clock (model time) cap; infinite by default.
    pub t_max: S,
}

impl<S: Scalar> SimConfig<S> {
    pub fn new(seed: u64, replicates: u64) -> Self {
        Self {
            seed,
            replicates,
            extinction_cap: 10_000,
            t_max: S::infinity(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument {
                reason: "replicates must be at least 1".into(),
            });
        }
        if self.extinction_cap == 0 {
            return Err(Error::InvalidArgument {
                reason: "extinction_cap must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// How a simulated run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Extinct,
    CapReached,
    TimedOut,
}

/// Result of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome<S> {
    pub kind: OutcomeKind,
    /// Infection events plus initial infectives.
    pub total_infections: u64,
    pub duration: S,
    pub final_state: InfectiveState,
}

fn replicate_rng(seed: u64, replicate: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Strictly positive uniform draw, for exponential waiting times.
fn positive_uniform<S: Scalar>(rng: &mut ChaCha12Rng) -> S {
    real::<S>(1.0 - rng.random::<f64>())
}

const RATE_REFRESH_EVENTS: u32 = 1_000;

#[cfg(debug_assertions)]
fn check_rate_drift<S: Scalar>(incremental: S, fresh: S) {
    let scale = fresh.abs().max(S::one());
    debug_assert!(
        (incremental - fresh).abs() <= real::<S>(1e-9) * scale,
        "incremental total rate drifted: {incremental:e} vs {fresh:e}"
    );
}

/// One exact-event run of the branching process. Events: infective
/// migration `j -> i` at rate `Q_ji Y_j`, infection in `i` at rate
/// `beta_i pi_i Y_i`, recovery at rate `gamma_i Y_i`. Deterministic given
/// `(cfg.seed, replicate)`.
pub fn simulate_branching<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    y0: &InfectiveState,
    cfg: &SimConfig<S>,
    replicate: u64,
) -> SimOutcome<S> {
    let m = params.m();
    assert_eq!(pi.m(), m, "pi dimension");
    assert_eq!(q.m(), m, "Q dimension");
    assert_eq!(y0.m(), m, "y0 dimension");
    let mut rng = replicate_rng(cfg.seed, replicate);

    let mut mig_out = vec![S::zero(); m];
    for j in 0..m {
        for i in 0..m {
            if i != j {
                mig_out[j] = mig_out[j] + q.rates()[[j, i]];
            }
        }
    }
    let infect: Vec<S> = (0..m)
        .map(|i| params.beta()[i] * pi.probs()[i])
        .collect();
    let per_capita: Vec<S> = (0..m)
        .map(|j| mig_out[j] + infect[j] + params.gamma()[j])
        .collect();

    let mut y: Vec<u64> = y0.counts().to_vec();
    let mut y_tot: u64 = y.iter().sum();
    let mut total_infections = y_tot;
    let mut t = S::zero();
    let fresh_total = |y: &[u64]| -> S {
        (0..m)
            .map(|j| per_capita[j] * S::from_u64(y[j]).unwrap())
            .sum()
    };
    let mut total_rate = fresh_total(&y);
    let mut events_since_refresh: u32 = 0;

    loop {
        if y_tot == 0 {
            return SimOutcome {
                kind: OutcomeKind::Extinct,
                total_infections,
                duration: t,
                final_state: InfectiveState::new(y),
            };
        }
        if total_infections >= cfg.extinction_cap {
            return SimOutcome {
                kind: OutcomeKind::CapReached,
                total_infections,
                duration: t,
                final_state: InfectiveState::new(y),
            };
        }

        let dt = -positive_uniform::<S>(&mut rng).ln() / total_rate;
        if t + dt > cfg.t_max {
            return SimOutcome {
                kind: OutcomeKind::TimedOut,
                total_infections,
                duration: cfg.t_max,
                final_state: InfectiveState::new(y),
            };
        }
        t = t + dt;

        // categorical event selection by linear scan over groups
        let mut target = real::<S>(rng.random::<f64>()) * total_rate;
        let mut group = m - 1;
        for j in 0..m {
            let share = per_capita[j] * S::from_u64(y[j]).unwrap();
            if target < share {
                group = j;
                break;
            }
            target = target - share;
        }
        // within the group: migration out, infection, recovery
        let mut within = target / S::from_u64(y[group].max(1)).unwrap();
        if within < mig_out[group] {
            // pick the destination
            let mut dest = if group == 0 { 1 % m } else { 0 };
            for i in 0..m {
                if i == group {
                    continue;
                }
                let rate = q.rates()[[group, i]];
                if within < rate {
                    dest = i;
                    break;
                }
                within = within - rate;
                dest = i;
            }
            y[group] -= 1;
            y[dest] += 1;
            total_rate = total_rate - per_capita[group] + per_capita[dest];
        } else if within < mig_out[group] + infect[group] {
            y[group] += 1;
            y_tot += 1;
            total_infections += 1;
            total_rate = total_rate + per_capita[group];
        } else {
            y[group] -= 1;
            y_tot -= 1;
            total_rate = total_rate - per_capita[group];
        }

        events_since_refresh += 1;
        if events_since_refresh >= RATE_REFRESH_EVENTS {
            let fresh = fresh_total(&y);
            #[cfg(debug_assertions)]
            check_rate_drift(total_rate, fresh);
            total_rate = fresh;
            events_since_refresh = 0;
        }
    }
}

/// Monte Carlo estimate of the extinction probability: the fraction of
/// replicates that die out before the cap, with its binomial standard error.
pub fn mc_extinction<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    y0: &InfectiveState,
    cfg: &SimConfig<S>,
) -> Result<(S, S)> {
    cfg.validate()?;
    let extinct: u64 = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| {
            let out = simulate_branching(params, pi, q, y0, cfg, k);
            (out.kind == OutcomeKind::Extinct) as u64
        })
        .sum();
    let n = real::<S>(cfg.replicates as f64);
    let p = S::from_u64(extinct).unwrap() / n;
    let stderr = (p * (S::one() - p) / n).sqrt();
    Ok((p, stderr))
}

/// Monte Carlo total-size summary over extinct replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalSizeEstimate<S> {
    pub mean: S,
    pub stderr: S,
    /// Fraction of replicates that hit the cap (excluded from the mean).
    pub capped_fraction: S,
    pub extinct_replicates: u64,
}

/// Sample mean of the total infection count over extinct replicates.
pub fn mc_total_size<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    y0: &InfectiveState,
    cfg: &SimConfig<S>,
) -> Result<TotalSizeEstimate<S>> {
    cfg.validate()?;
    let outcomes: Vec<(u64, OutcomeKind)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| {
            let out = simulate_branching(params, pi, q, y0, cfg, k);
            (out.total_infections, out.kind)
        })
        .collect();
    let mut capped = 0u64;
    let mut count = 0u64;
    let mut sum = 0u128;
    let mut sum_sq = 0u128;
    for &(size, kind) in &outcomes {
        match kind {
            OutcomeKind::Extinct => {
                count += 1;
                sum += size as u128;
                sum_sq += (size as u128) * (size as u128);
            }
            OutcomeKind::CapReached => capped += 1,
            OutcomeKind::TimedOut => {}
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument {
            reason: "no replicate went extinct; total size is undefined".into(),
        });
    }
    let n = real::<S>(count as f64);
    let mean = real::<S>(sum as f64) / n;
    let variance = (real::<S>(sum_sq as f64) / n - mean * mean).max(S::zero());
    let stderr = (variance / n).sqrt();
    Ok(TotalSizeEstimate {
        mean,
        stderr,
        capped_fraction: real::<S>(capped as f64) / real::<S>(cfg.replicates as f64),
        extinct_replicates: count,
    })
}

/// One exact-event run of the closed finite-population chain: infection in
/// group `i` at rate `(beta_i / N) X_i Y_i`, recovery with immunity at rate
/// `gamma_i Y_i`, susceptible migration by `R`, infective migration by `Q`.
/// The initial susceptibles are multinomial over the stationary law of `R`.
pub fn simulate_finite_n<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    n_pop: u64,
    y0: &InfectiveState,
    cfg: &SimConfig<S>,
    replicate: u64,
) -> Result<SimOutcome<S>> {
    let m = params.m();
    if r.m() != m || q.m() != m || y0.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: r.m().max(q.m()).max(y0.m()),
        });
    }
    if !r.is_irreducible() || !q.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if n_pop < y0.total() {
        return Err(Error::InvalidArgument {
            reason: format!("population {n_pop} smaller than initial infectives"),
        });
    }
    let stationary = model::stationary_distribution(r)?;
    let mut rng = replicate_rng(cfg.seed, replicate);

    // multinomial initial placement via a chain of binomials
    let mut x = vec![0u64; m];
    let mut remaining = n_pop - y0.total();
    let mut prob_left = 1.0f64;
    for i in 0..m - 1 {
        let p_i = stationary.probs()[i].as_f64();
        let p = (p_i / prob_left).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p)
            .expect("valid binomial parameters")
            .sample(&mut rng);
        x[i] = draw;
        remaining -= draw;
        prob_left = (prob_left - p_i).max(0.0);
    }
    x[m - 1] = remaining;

    let mut y: Vec<u64> = y0.counts().to_vec();
    let mut y_tot: u64 = y.iter().sum();
    let mut x_tot: u64 = x.iter().sum();
    let mut removed: u64 = 0;
    let mut total_infections = y_tot;
    let mut t = S::zero();

    let mut r_out = vec![S::zero(); m];
    let mut q_out = vec![S::zero(); m];
    for j in 0..m {
        for i in 0..m {
            if i != j {
                r_out[j] = r_out[j] + r.rates()[[j, i]];
                q_out[j] = q_out[j] + q.rates()[[j, i]];
            }
        }
    }
    let contact: Vec<S> = (0..m)
        .map(|i| params.beta()[i] / S::from_u64(n_pop).unwrap())
        .collect();

    let group_rate = |x: &[u64], y: &[u64], j: usize| -> S {
        let xs = S::from_u64(x[j]).unwrap();
        let ys = S::from_u64(y[j]).unwrap();
        r_out[j] * xs + q_out[j] * ys + contact[j] * xs * ys + params.gamma()[j] * ys
    };
    let fresh_total = |x: &[u64], y: &[u64]| -> S { (0..m).map(|j| group_rate(x, y, j)).sum() };
    let mut total_rate = fresh_total(&x, &y);
    let mut events_since_refresh: u32 = 0;

    loop {
        debug_assert_eq!(x_tot + y_tot + removed, n_pop, "closed population");
        if y_tot == 0 {
            return Ok(SimOutcome {
                kind: OutcomeKind::Extinct,
                total_infections,
                duration: t,
                final_state: InfectiveState::new(y),
            });
        }
        if total_infections >= cfg.extinction_cap {
            return Ok(SimOutcome {
                kind: OutcomeKind::CapReached,
                total_infections,
                duration: t,
                final_state: InfectiveState::new(y),
            });
        }
        let dt = -positive_uniform::<S>(&mut rng).ln() / total_rate;
        if t + dt > cfg.t_max {
            return Ok(SimOutcome {
                kind: OutcomeKind::TimedOut,
                total_infections,
                duration: cfg.t_max,
                final_state: InfectiveState::new(y),
            });
        }
        t = t + dt;

        let mut target = real::<S>(rng.random::<f64>()) * total_rate;
        let mut group = m - 1;
        for j in 0..m {
            let share = group_rate(&x, &y, j);
            if target < share {
                group = j;
                break;
            }
            target = target - share;
        }

        let before_src = group_rate(&x, &y, group);
        let xs = S::from_u64(x[group]).unwrap();
        let ys = S::from_u64(y[group]).unwrap();
        let sus_mig = r_out[group] * xs;
        let inf_mig = q_out[group] * ys;
        let infection = contact[group] * xs * ys;

        let mut dest = usize::MAX;
        if target < sus_mig {
            let mut within = target / xs;
            dest = pick_destination(r.rates(), group, &mut within, m);
            x[group] -= 1;
            x[dest] += 1;
        } else if target < sus_mig + inf_mig {
            let mut within = (target - sus_mig) / ys;
            dest = pick_destination(q.rates(), group, &mut within, m);
            y[group] -= 1;
            y[dest] += 1;
        } else if target < sus_mig + inf_mig + infection {
            x[group] -= 1;
            x_tot -= 1;
            y[group] += 1;
            y_tot += 1;
            total_infections += 1;
        } else {
            y[group] -= 1;
            y_tot -= 1;
            removed += 1;
        }
        total_rate = total_rate - before_src + group_rate(&x, &y, group);
        if dest != usize::MAX {
            // destination group changed too; its pre-event rate must be
            // rebuilt from the pre-event counts
            let after_dest = group_rate(&x, &y, dest);
            let (xd, yd) = (x[dest], y[dest]);
            let (mut xb, mut yb) = (xd, yd);
            if target < sus_mig {
                xb -= 1;
            } else {
                yb -= 1;
            }
            let xbs = S::from_u64(xb).unwrap();
            let ybs = S::from_u64(yb).unwrap();
            let before_dest = r_out[dest] * xbs
                + q_out[dest] * ybs
                + contact[dest] * xbs * ybs
                + params.gamma()[dest] * ybs;
            total_rate = total_rate - before_dest + after_dest;
        }

        events_since_refresh += 1;
        if events_since_refresh >= RATE_REFRESH_EVENTS {
            let fresh = fresh_total(&x, &y);
            #[cfg(debug_assertions)]
            check_rate_drift(total_rate, fresh);
            total_rate = fresh;
            events_since_refresh = 0;
        }
    }
}

fn pick_destination<S: Scalar>(
    rates: &ndarray::Array2<S>,
    src: usize,
    within: &mut S,
    m: usize,
) -> usize {
    let mut dest = if src == 0 { 1 % m } else { 0 };
    for i in 0..m {
        if i == src {
            continue;
        }
        let rate = rates[[src, i]];
        if *within < rate {
            return i;
        }
        *within = *within - rate;
        dest = i;
    }
    dest
}

/// Minor-outbreak summary of finite-population replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorOutbreakEstimate<S> {
    /// Fraction of replicates with fewer total infections than the
    /// threshold.
    pub fraction: S,
    pub stderr: S,
    /// Five percent of the population, the minor/major split.
    pub threshold: u64,
}

/// Fraction of finite-population replicates that stay below five percent of
/// the population ever infected.
pub fn mc_minor_outbreak<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    n_pop: u64,
    y0: &InfectiveState,
    cfg: &SimConfig<S>,
) -> Result<MinorOutbreakEstimate<S>> {
    cfg.validate()?;
    let threshold = ((n_pop as f64) * 0.05).ceil() as u64;
    let minor: u64 = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| {
            let out = simulate_finite_n(params, r, q, n_pop, y0, cfg, k)
                .expect("validated finite-N inputs");
            (out.total_infections < threshold) as u64
        })
        .sum();
    let n = real::<S>(cfg.replicates as f64);
    let p = S::from_u64(minor).unwrap() / n;
    let stderr = (p * (S::one() - p) / n).sqrt();
    Ok(MinorOutbreakEstimate {
        fraction: p,
        stderr,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn case_a() -> (ModelParams<f64>, SimplexPoint<f64>, GeneratorMatrix<f64>) {
        (
            ModelParams::new(vec![1.0, 2.0], vec![0.5, 0.5]).unwrap(),
            SimplexPoint::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap(),
            GeneratorMatrix::new(array![[-1.0, 1.0], [2.0, -2.0]]).unwrap(),
        )
    }

    #[test]
    fn empty_start_is_immediately_extinct() {
        let (p, pi, q) = case_a();
        let cfg = SimConfig::new(1, 1);
        let out = simulate_branching(&p, &pi, &q, &InfectiveState::new(vec![0, 0]), &cfg, 0);
        assert_eq!(out.kind, OutcomeKind::Extinct);
        assert_eq!(out.total_infections, 0);
        assert_eq!(out.duration, 0.0);
    }

    #[test]
    fn same_seed_and_replicate_reproduce_the_outcome() {
        let (p, pi, q) = case_a();
        let cfg = SimConfig::new(42, 1);
        let y0 = InfectiveState::new(vec![1, 0]);
        let a = simulate_branching(&p, &pi, &q, &y0, &cfg, 3);
        let b = simulate_branching(&p, &pi, &q, &y0, &cfg, 3);
        assert_eq!(a, b);
        let c = simulate_branching(&p, &pi, &q, &y0, &cfg, 4);
        // different streams essentially never agree event for event
        assert!(a != c || a.total_infections == c.total_infections);
    }

    #[test]
    fn pure_death_process_has_unit_mean_duration() {
        let p = ModelParams::new_unchecked(vec![0.0], vec![1.0]);
        let pi = SimplexPoint::new(vec![1.0]).unwrap();
        let q = GeneratorMatrix::zero(1);
        let cfg = SimConfig::new(7, 100_000);
        let y0 = InfectiveState::new(vec![1]);
        let mut sum = 0.0;
        for k in 0..cfg.replicates {
            let out = simulate_branching(&p, &pi, &q, &y0, &cfg, k);
            assert_eq!(out.kind, OutcomeKind::Extinct);
            assert_eq!(out.total_infections, 1);
            sum += out.duration;
        }
        let mean = sum / cfg.replicates as f64;
        // Exp(1) has unit mean and variance; allow 3 sigma
        assert!((mean - 1.0).abs() < 3.0 / (cfg.replicates as f64).sqrt());
    }

    #[test]
    fn mc_extinction_matches_the_pgf_fixed_point() {
        let (p, pi, q) = case_a();
        let mut cfg = SimConfig::new(42, 20_000);
        cfg.extinction_cap = 2_000;
        let y0 = InfectiveState::new(vec![1, 0]);
        let (estimate, stderr) = mc_extinction(&p, &pi, &q, &y0, &cfg).unwrap();
        assert!((estimate - 0.75).abs() < 3.0 * stderr + 1e-3, "estimate {estimate}");
    }

    #[test]
    fn mc_extinction_scalar_case() {
        let p = ModelParams::<f64>::new(vec![2.0], vec![1.0]).unwrap();
        let pi = SimplexPoint::new(vec![1.0]).unwrap();
        let q = GeneratorMatrix::zero(1);
        let mut cfg = SimConfig::new(11, 20_000);
        cfg.extinction_cap = 2_000;
        let y0 = InfectiveState::new(vec![1]);
        let (estimate, stderr) = mc_extinction(&p, &pi, &q, &y0, &cfg).unwrap();
        assert!((estimate - 0.5).abs() < 3.0 * stderr + 1e-3, "estimate {estimate}");
    }

    #[test]
    fn subcritical_runs_always_die_out() {
        let p = ModelParams::new(vec![2.0, 4.0], vec![2.0, 2.0]).unwrap();
        let pi = SimplexPoint::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let q = GeneratorMatrix::new(array![[-1.0, 1.0], [2.0, -2.0]]).unwrap();
        let cfg = SimConfig::new(5, 5_000);
        let y0 = InfectiveState::new(vec![1, 0]);
        let (estimate, _) = mc_extinction(&p, &pi, &q, &y0, &cfg).unwrap();
        assert_eq!(estimate, 1.0);
    }

    #[test]
    fn mc_total_size_matches_the_neumann_series() {
        let p = ModelParams::<f64>::new(vec![2.0, 4.0], vec![2.0, 2.0]).unwrap();
        let pi = SimplexPoint::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let q = GeneratorMatrix::new(array![[-1.0, 1.0], [2.0, -2.0]]).unwrap();
        let cfg = SimConfig::new(9, 20_000);
        let y0 = InfectiveState::new(vec![1, 0]);
        let est = mc_total_size(&p, &pi, &q, &y0, &cfg).unwrap();
        assert!((est.mean - 3.0).abs() < 3.0 * est.stderr, "mean {}", est.mean);
        assert_eq!(est.capped_fraction, 0.0);
    }

    #[test]
    fn mc_total_size_scalar_case() {
        let p = ModelParams::<f64>::new(vec![1.0], vec![2.0]).unwrap();
        let pi = SimplexPoint::new(vec![1.0]).unwrap();
        let q = GeneratorMatrix::zero(1);
        let cfg = SimConfig::new(13, 20_000);
        let y0 = InfectiveState::new(vec![1]);
        let est = mc_total_size(&p, &pi, &q, &y0, &cfg).unwrap();
        assert!((est.mean - 2.0).abs() < 3.0 * est.stderr, "mean {}", est.mean);
    }

    #[test]
    fn zero_contact_rates_give_exactly_the_initial_count() {
        let p = ModelParams::new_unchecked(vec![0.0, 0.0], vec![1.0, 0.5]);
        let pi = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let q = GeneratorMatrix::new(array![[-1.0, 1.0], [2.0, -2.0]]).unwrap();
        let cfg = SimConfig::new(3, 200);
        let y0 = InfectiveState::new(vec![3, 2]);
        for k in 0..cfg.replicates {
            let out = simulate_branching(&p, &pi, &q, &y0, &cfg, k);
            assert_eq!(out.total_infections, 5);
            assert_eq!(out.kind, OutcomeKind::Extinct);
        }
    }

    #[test]
    fn replicates_zero_is_rejected() {
        let (p, pi, q) = case_a();
        let cfg = SimConfig::new(1, 0);
        let y0 = InfectiveState::new(vec![1, 0]);
        assert!(mc_extinction(&p, &pi, &q, &y0, &cfg).is_err());
    }

    #[test]
    fn finite_n_empty_start_is_extinct() {
        let (p, _, q) = case_a();
        let r = GeneratorMatrix::new(array![[-0.5, 0.5], [1.0, -1.0]]).unwrap();
        let cfg = SimConfig::new(21, 1);
        let out =
            simulate_finite_n(&p, &r, &q, 100, &InfectiveState::new(vec![0, 0]), &cfg, 0).unwrap();
        assert_eq!(out.kind, OutcomeKind::Extinct);
        assert_eq!(out.total_infections, 0);
    }

    #[test]
    fn finite_n_is_deterministic_and_conserves_population() {
        let (p, _, q) = case_a();
        let r = GeneratorMatrix::new(array![[-0.5, 0.5], [1.0, -1.0]]).unwrap();
        let cfg = SimConfig::new(77, 1);
        let y0 = InfectiveState::new(vec![2, 1]);
        let a = simulate_finite_n(&p, &r, &q, 500, &y0, &cfg, 0).unwrap();
        let b = simulate_finite_n(&p, &r, &q, 500, &y0, &cfg, 0).unwrap();
        assert_eq!(a, b);
        // conservation is debug-asserted on every event inside the loop;
        // a successful run at N = 500 exercises it thoroughly
        assert!(a.total_infections <= 500);
    }

    #[test]
    fn finite_n_minor_outbreak_fraction_tracks_the_branching_limit() {
        let (p, _, q) = case_a();
        // reversible with stationary law pi~ = (2/3, 1/3)
        let r = GeneratorMatrix::new(array![[-0.5, 0.5], [1.0, -1.0]]).unwrap();
        let cfg = SimConfig::new(1234, 400);
        let y0 = InfectiveState::new(vec![1, 0]);
        let est = mc_minor_outbreak(&p, &r, &q, 2_000, &y0, &cfg).unwrap();
        assert_eq!(est.threshold, 100);
        // branching-process extinction probability is 0.75; finite N and
        // modest replicate count both blur it
        assert!((est.fraction - 0.75).abs() < 0.08, "fraction {}", est.fraction);
    }
}
