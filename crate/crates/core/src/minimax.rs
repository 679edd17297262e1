//! Nested minimax optimization: `inf_pi sup_Q` and `sup_Q inf_pi` of the
//! growth rate `tau` (and of `R0`), with duality gap and argument recovery.
//!
//! The set of irreducible migration matrices is unbounded, so the search
//! compacts it to a box `[q_lo, q_hi]` per off-diagonal rate, explored in
//! log space. Both objectives saturate in the fast-mixing and decoupled
//! limits, which is what makes the box harmless; the acceptance suite checks
//! insensitivity on nested boxes. All searches are deterministic: multistart
//! points come from a quasi-random low-discrepancy sequence, and candidate
//! optima are reduced in a fixed order.

use std::cell::Cell;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{GeneratorMatrix, ModelParams, SimplexPoint};
use crate::scalar::{real, Scalar};
use crate::spectral;

/// Search region and optimizer settings for the nested games.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox<S> {
    /// Lower bound on each off-diagonal migration rate (1/time).
    pub q_lo: S,
    /// Upper bound on each off-diagonal migration rate (1/time).
    pub q_hi: S,
    /// Interior floor replacing the open simplex.
    pub pi_floor: S,
    /// Number of direct-search restarts in each Q game.
    pub multistarts: usize,
    /// Value tolerance of the outer game; inner games run at `tol / 10`.
    pub tol: S,
}

impl<S: Scalar> Default for SearchBox<S> {
    fn default() -> Self {
        Self {
            q_lo: real(1e-6),
            q_hi: real(1e3),
            pi_floor: real(1e-9),
            multistarts: 8,
            tol: real(1e-8),
        }
    }
}

impl<S: Scalar> SearchBox<S> {
    fn validate(&self, m: usize) -> Result<()> {
        if !(self.q_lo > S::zero() && self.q_lo < self.q_hi) {
            return Err(Error::InvalidArgument {
                reason: format!(
                    "need 0 < q_lo < q_hi, got [{:e}, {:e}]",
                    self.q_lo, self.q_hi
                ),
            });
        }
        let m_s = S::from_usize(m).unwrap();
        if !(self.pi_floor > S::zero() && self.pi_floor * m_s < S::one()) {
            return Err(Error::InvalidArgument {
                reason: format!("pi_floor {:e} must lie in (0, 1/m)", self.pi_floor),
            });
        }
        if self.multistarts == 0 {
            return Err(Error::InvalidArgument {
                reason: "multistarts must be at least 1".into(),
            });
        }
        if !(self.tol > S::zero()) {
            return Err(Error::InvalidArgument {
                reason: "tol must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Objective of the nested games.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Tau,
    R0,
}

/// Result of a single (upper or lower) game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameResult<S> {
    pub value: S,
    pub pi_arg: SimplexPoint<S>,
    pub q_arg: GeneratorMatrix<S>,
    pub evaluations: u64,
}

/// Result of a fixed-`pi` maximization over the Q box.
#[derive(Debug, Clone, PartialEq)]
pub struct SupOverQ<S> {
    pub value: S,
    pub q_arg: GeneratorMatrix<S>,
    pub evaluations: u64,
}

/// Combined upper/lower game summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxResult<S> {
    pub inf_sup: S,
    pub sup_inf: S,
    /// `inf_sup - sup_inf`; weak duality keeps it above `-2 tol`.
    pub gap: S,
    /// Outer minimizer of the upper game.
    pub pi_arg: SimplexPoint<S>,
    /// Outer maximizer of the lower game.
    pub q_arg: GeneratorMatrix<S>,
    pub evaluations: u64,
}

struct Game<'a, S: Scalar> {
    params: &'a ModelParams<S>,
    objective: Objective,
    evals: Cell<u64>,
}

impl<'a, S: Scalar> Game<'a, S> {
    fn new(params: &'a ModelParams<S>, objective: Objective) -> Self {
        Self {
            params,
            objective,
            evals: Cell::new(0),
        }
    }

    /// Objective evaluation. Budget-exhausted eigenvalue iterations signal a
    /// near-degenerate dominant pair; their value estimate is accurate to
    /// roughly the spectral gap, far below the search tolerances, so the
    /// lenient path is used here.
    fn eval(&self, pi: &SimplexPoint<S>, q: &GeneratorMatrix<S>) -> S {
        self.evals.set(self.evals.get() + 1);
        match self.objective {
            Objective::Tau => spectral::tau_lenient(self.params, pi, q)
                .expect("in-box tau evaluation cannot fail"),
            Objective::R0 => spectral::r0_lenient(self.params, pi, q)
                .expect("in-box r0 evaluation cannot fail"),
        }
    }
}

/// Off-diagonal coordinates `(i, j)`, row-major, `i != j`.
fn offdiag_index(m: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        for j in 0..m {
            if i != j {
                idx.push((i, j));
            }
        }
    }
    idx
}

fn q_from_log<S: Scalar>(
    coords: &[S],
    idx: &[(usize, usize)],
    m: usize,
    lo: S,
    hi: S,
) -> GeneratorMatrix<S> {
    let mut off = Array2::zeros((m, m));
    for (k, &(i, j)) in idx.iter().enumerate() {
        off[[i, j]] = coords[k].exp().max(lo).min(hi);
    }
    GeneratorMatrix::from_off_diagonal(off).expect("positive off-diagonals form a generator")
}

fn pi_two_group<S: Scalar>(p1: S) -> SimplexPoint<S> {
    SimplexPoint::new(vec![p1, S::one() - p1]).expect("two-group point")
}

/// Interior point from unconstrained logits:
/// `pi = pi_floor + (1 - m pi_floor) softmax(u)`.
fn pi_from_logits<S: Scalar>(logits: &[S], floor: S) -> SimplexPoint<S> {
    let m = logits.len();
    let max = logits.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
    let mut weights: Vec<S> = logits.iter().map(|&u| (u - max).exp()).collect();
    let sum: S = weights.iter().copied().sum();
    let free = S::one() - S::from_usize(m).unwrap() * floor;
    for w in weights.iter_mut() {
        *w = floor + free * (*w / sum);
    }
    SimplexPoint::new(weights).expect("softmax stays on the simplex")
}

// ---------------------------------------------------------------------------
// direct-search machinery
// ---------------------------------------------------------------------------

/// Generalized-golden-ratio (R2) low-discrepancy sequence on the unit cube.
fn quasi_random_unit(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (phi + 1.0).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|k| (1.0 / phi).powi(k as i32)).collect();
    (1..=n)
        .map(|step| {
            alpha
                .iter()
                .map(|a| (0.5 + a * step as f64).fract())
                .collect()
        })
        .collect()
}

/// Bounded Nelder-Mead minimization; candidate points are clamped into the
/// box, so boundary optima stay reachable.
fn nelder_mead<S: Scalar>(
    f: &mut impl FnMut(&[S]) -> S,
    x0: &[S],
    lo: &[S],
    hi: &[S],
    ftol: S,
    max_iter: usize,
) -> (Vec<S>, S) {
    let d = x0.len();
    let clamp = |x: &mut Vec<S>| {
        for k in 0..d {
            x[k] = x[k].max(lo[k]).min(hi[k]);
        }
    };
    let tenth = real::<S>(0.1);

    let mut simplex: Vec<(Vec<S>, S)> = Vec::with_capacity(d + 1);
    let mut base = x0.to_vec();
    clamp(&mut base);
    let fbase = f(&base);
    simplex.push((base.clone(), fbase));
    for k in 0..d {
        let mut x = base.clone();
        let width = (hi[k] - lo[k]) * tenth;
        // step inward when the start hugs the upper bound
        if x[k] + width <= hi[k] {
            x[k] = x[k] + width;
        } else {
            x[k] = x[k] - width;
        }
        clamp(&mut x);
        let fx = f(&x);
        simplex.push((x, fx));
    }

    let (alpha, gamma, rho, sigma) = (S::one(), real::<S>(2.0), real::<S>(0.5), real::<S>(0.5));

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective is not NaN"));
        let fbest = simplex[0].1;
        let fworst = simplex[d].1;
        if fworst - fbest <= ftol * (fbest.abs() + ftol) {
            break;
        }

        let mut centroid = vec![S::zero(); d];
        for (x, _) in simplex.iter().take(d) {
            for k in 0..d {
                centroid[k] = centroid[k] + x[k];
            }
        }
        let inv = S::one() / S::from_usize(d).unwrap();
        for c in centroid.iter_mut() {
            *c = *c * inv;
        }

        let worst = simplex[d].0.clone();
        let mut reflected: Vec<S> = (0..d)
            .map(|k| centroid[k] + alpha * (centroid[k] - worst[k]))
            .collect();
        clamp(&mut reflected);
        let fr = f(&reflected);

        if fr < simplex[0].1 {
            let mut expanded: Vec<S> = (0..d)
                .map(|k| centroid[k] + gamma * (reflected[k] - centroid[k]))
                .collect();
            clamp(&mut expanded);
            let fe = f(&expanded);
            simplex[d] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let mut contracted: Vec<S> = (0..d)
                .map(|k| centroid[k] + rho * (worst[k] - centroid[k]))
                .collect();
            clamp(&mut contracted);
            let fc = f(&contracted);
            if fc < simplex[d].1 {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for k in 0..d {
                        entry.0[k] = best[k] + sigma * (entry.0[k] - best[k]);
                    }
                    clamp(&mut entry.0);
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("objective is not NaN"));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}

/// Golden-section minimization on `[a, b]`, with endpoint probes so boundary
/// minima are exact.
fn golden_min<S: Scalar>(
    f: &mut impl FnMut(S) -> S,
    a: S,
    b: S,
    xtol: S,
    max_iter: usize,
) -> (S, S) {
    let inv_phi = real::<S>(0.618_033_988_749_894_8);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        let cand = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        if cand.1 < best.1 {
            best = cand;
        }
    }
    let fa = f(a);
    if fa < best.1 {
        best = (a, fa);
    }
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    best
}

/// Multistart maximization of `f(coords)` over the log-rate box. Starts:
/// box center, the adversarial pattern `log(1/beta_j)`, the best box corner,
/// then quasi-random fill. The corner sweep matters because the saturating
/// optima of the flat contour regimes sit there.
fn maximize_over_box<S: Scalar>(
    f: &mut impl FnMut(&[S]) -> S,
    params: &ModelParams<S>,
    idx: &[(usize, usize)],
    lo_log: S,
    hi_log: S,
    multistarts: usize,
    ftol: S,
) -> (Vec<S>, S) {
    let d = idx.len();
    let lo = vec![lo_log; d];
    let hi = vec![hi_log; d];
    let mut neg = |x: &[S]| -f(x);

    let mut best: Option<(Vec<S>, S)> = None;
    let consider = |x: Vec<S>, fx: S, best: &mut Option<(Vec<S>, S)>| {
        if best.as_ref().map_or(true, |(_, b)| fx < *b) {
            *best = Some((x, fx));
        }
    };

    // Full corner sweep in low dimension (the saturating regimes put the
    // optimum there); just the two extreme corners when it would explode.
    if d <= 4 {
        for mask in 0..(1u32 << d) {
            let x: Vec<S> = (0..d)
                .map(|k| if mask >> k & 1 == 1 { hi_log } else { lo_log })
                .collect();
            let fx = neg(&x);
            consider(x, fx, &mut best);
        }
    } else {
        for corner in [vec![lo_log; d], vec![hi_log; d]] {
            let fx = neg(&corner);
            consider(corner, fx, &mut best);
        }
    }

    let mid = (lo_log + hi_log) * real(0.5);
    let mut starts: Vec<Vec<S>> = vec![vec![mid; d]];
    let adversarial: Vec<S> = idx
        .iter()
        .map(|&(_, j)| (S::one() / params.beta()[j]).ln().max(lo_log).min(hi_log))
        .collect();
    starts.push(adversarial);
    if let Some((corner, _)) = &best {
        starts.push(corner.clone());
    }
    if starts.len() < multistarts {
        for unit in quasi_random_unit(d, multistarts - starts.len()) {
            starts.push(
                unit.iter()
                    .map(|&u| lo_log + (hi_log - lo_log) * real(u))
                    .collect(),
            );
        }
    }

    for start in starts {
        let (x, fx) = nelder_mead(&mut neg, &start, &lo, &hi, ftol, 150 * d);
        consider(x, fx, &mut best);
    }
    let (x, fneg) = best.expect("at least one candidate evaluated");
    (x, -fneg)
}

// ---------------------------------------------------------------------------
// the games
// ---------------------------------------------------------------------------

fn sup_over_q_impl<S: Scalar>(
    game: &Game<'_, S>,
    pi: &SimplexPoint<S>,
    bx: &SearchBox<S>,
    ftol: S,
) -> (S, GeneratorMatrix<S>) {
    let m = game.params.m();
    if m == 1 {
        let q = GeneratorMatrix::zero(1);
        return (game.eval(pi, &q), q);
    }
    let idx = offdiag_index(m);
    let (lo_log, hi_log) = (bx.q_lo.ln(), bx.q_hi.ln());
    let mut f = |coords: &[S]| {
        let q = q_from_log(coords, &idx, m, bx.q_lo, bx.q_hi);
        game.eval(pi, &q)
    };
    let (coords, value) = maximize_over_box(
        &mut f,
        game.params,
        &idx,
        lo_log,
        hi_log,
        bx.multistarts,
        ftol,
    );
    (value, q_from_log(&coords, &idx, m, bx.q_lo, bx.q_hi))
}

/// `sup_Q tau(pi, Q)` over the box, with the maximizing matrix.
pub fn sup_tau_over_q<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    bx: &SearchBox<S>,
) -> Result<SupOverQ<S>> {
    sup_objective_over_q(params, pi, bx, Objective::Tau)
}

/// `sup_Q R0(pi, Q)` over the box, with the maximizing matrix.
pub fn sup_r0_over_q<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    bx: &SearchBox<S>,
) -> Result<SupOverQ<S>> {
    check_r0_preconditions(params)?;
    sup_objective_over_q(params, pi, bx, Objective::R0)
}

fn sup_objective_over_q<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    bx: &SearchBox<S>,
    objective: Objective,
) -> Result<SupOverQ<S>> {
    bx.validate(params.m())?;
    if pi.m() != params.m() {
        return Err(Error::DimensionMismatch {
            expected: params.m(),
            got: pi.m(),
        });
    }
    let game = Game::new(params, objective);
    let inner_tol = bx.tol / real(10.0);
    let (value, q_arg) = sup_over_q_impl(&game, pi, bx, inner_tol);
    Ok(SupOverQ {
        value,
        q_arg,
        evaluations: game.evals.get(),
    })
}

fn check_r0_preconditions<S: Scalar>(params: &ModelParams<S>) -> Result<()> {
    for i in 0..params.m() {
        if params.gamma()[i] == S::zero() {
            return Err(Error::ZeroRecoveryGroup { index: i });
        }
    }
    Ok(())
}

fn upper_game<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
    objective: Objective,
) -> Result<GameResult<S>> {
    bx.validate(params.m())?;
    let m = params.m();
    let game = Game::new(params, objective);
    let inner_tol = bx.tol / real(10.0);

    if m == 1 {
        let pi = SimplexPoint::uniform(1);
        let q = GeneratorMatrix::zero(1);
        let value = game.eval(&pi, &q);
        return Ok(GameResult {
            value,
            pi_arg: pi,
            q_arg: q,
            evaluations: game.evals.get(),
        });
    }

    let (pi_arg, value) = if m == 2 {
        let mut phi = |p1: S| sup_over_q_impl(&game, &pi_two_group(p1), bx, inner_tol).0;
        let xtol = bx.tol.sqrt() * real(0.1);
        let (p1, value) = golden_min(&mut phi, bx.pi_floor, S::one() - bx.pi_floor, xtol, 200);
        (pi_two_group(p1), value)
    } else {
        let logit_bound = real::<S>(16.0);
        let lo = vec![-logit_bound; m];
        let hi = vec![logit_bound; m];
        let mut phi = |logits: &[S]| {
            let pi = pi_from_logits(logits, bx.pi_floor);
            sup_over_q_impl(&game, &pi, bx, inner_tol).0
        };
        let mut best: Option<(Vec<S>, S)> = None;
        let mut starts: Vec<Vec<S>> = vec![vec![S::zero(); m]];
        for unit in quasi_random_unit(m, bx.multistarts.saturating_sub(1)) {
            starts.push(
                unit.iter()
                    .map(|&u| -logit_bound + (logit_bound + logit_bound) * real(u))
                    .collect(),
            );
        }
        for start in starts {
            let (x, fx) = nelder_mead(&mut phi, &start, &lo, &hi, bx.tol, 150 * m);
            if best.as_ref().map_or(true, |(_, b)| fx < *b) {
                best = Some((x, fx));
            }
        }
        let (logits, value) = best.expect("at least one start");
        (pi_from_logits(&logits, bx.pi_floor), value)
    };

    let (_, q_arg) = sup_over_q_impl(&game, &pi_arg, bx, inner_tol);
    Ok(GameResult {
        value,
        pi_arg,
        q_arg,
        evaluations: game.evals.get(),
    })
}

fn inf_over_pi_impl<S: Scalar>(
    game: &Game<'_, S>,
    q: &GeneratorMatrix<S>,
    bx: &SearchBox<S>,
    ftol: S,
) -> (S, SimplexPoint<S>) {
    let m = game.params.m();
    if m == 1 {
        let pi = SimplexPoint::uniform(1);
        return (game.eval(&pi, q), pi);
    }
    if m == 2 {
        let mut f = |p1: S| game.eval(&pi_two_group(p1), q);
        let xtol = ftol.sqrt() * real(0.1);
        let (p1, value) = golden_min(&mut f, bx.pi_floor, S::one() - bx.pi_floor, xtol, 200);
        return (value, pi_two_group(p1));
    }
    let logit_bound = real::<S>(16.0);
    let lo = vec![-logit_bound; m];
    let hi = vec![logit_bound; m];
    let mut f = |logits: &[S]| game.eval(&pi_from_logits(logits, bx.pi_floor), q);
    let (logits, value) = nelder_mead(&mut f, &vec![S::zero(); m], &lo, &hi, ftol, 150 * m);
    (value, pi_from_logits(&logits, bx.pi_floor))
}

fn lower_game<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
    objective: Objective,
) -> Result<GameResult<S>> {
    bx.validate(params.m())?;
    let m = params.m();
    let game = Game::new(params, objective);
    let inner_tol = bx.tol / real(10.0);

    if m == 1 {
        let pi = SimplexPoint::uniform(1);
        let q = GeneratorMatrix::zero(1);
        let value = game.eval(&pi, &q);
        return Ok(GameResult {
            value,
            pi_arg: pi,
            q_arg: q,
            evaluations: game.evals.get(),
        });
    }

    let idx = offdiag_index(m);
    let (lo_log, hi_log) = (bx.q_lo.ln(), bx.q_hi.ln());
    let mut psi = |coords: &[S]| {
        let q = q_from_log(coords, &idx, m, bx.q_lo, bx.q_hi);
        inf_over_pi_impl(&game, &q, bx, inner_tol).0
    };
    let (coords, value) = maximize_over_box(
        &mut psi,
        params,
        &idx,
        lo_log,
        hi_log,
        bx.multistarts,
        bx.tol,
    );
    let q_arg = q_from_log(&coords, &idx, m, bx.q_lo, bx.q_hi);
    let (_, pi_arg) = inf_over_pi_impl(&game, &q_arg, bx, inner_tol);
    Ok(GameResult {
        value,
        pi_arg,
        q_arg,
        evaluations: game.evals.get(),
    })
}

/// Upper game `inf_pi sup_Q tau(pi, Q)`.
pub fn inf_pi_sup_q_tau<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
) -> Result<GameResult<S>> {
    upper_game(params, bx, Objective::Tau)
}

/// Lower game `sup_Q inf_pi tau(pi, Q)`.
pub fn sup_inf_tau<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
) -> Result<GameResult<S>> {
    lower_game(params, bx, Objective::Tau)
}

fn combine<S: Scalar>(upper: GameResult<S>, lower: GameResult<S>) -> MinimaxResult<S> {
    MinimaxResult {
        inf_sup: upper.value,
        sup_inf: lower.value,
        gap: upper.value - lower.value,
        pi_arg: upper.pi_arg,
        q_arg: lower.q_arg,
        evaluations: upper.evaluations + lower.evaluations,
    }
}

/// Runs both `tau` games and reports the duality gap.
pub fn minimax_tau<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
) -> Result<MinimaxResult<S>> {
    let upper = upper_game(params, bx, Objective::Tau)?;
    let lower = lower_game(params, bx, Objective::Tau)?;
    Ok(combine(upper, lower))
}

/// Runs both `R0` games; requires every recovery rate to be positive.
pub fn minimax_r0<S: Scalar>(
    params: &ModelParams<S>,
    bx: &SearchBox<S>,
) -> Result<MinimaxResult<S>> {
    check_r0_preconditions(params)?;
    let upper = upper_game(params, bx, Objective::R0)?;
    let lower = lower_game(params, bx, Objective::R0)?;
    Ok(combine(upper, lower))
}
