//! Foundational domain types: model parameters, probability vectors over
//! groups, migration rate matrices, and infective counts.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tol;

/// Per-group contact and recovery rates.
///
/// Contact rates `beta` must be strictly positive; recovery rates `gamma`
/// must be nonnegative. Operations that invert `diag(gamma) - Q` impose
/// additional positivity at the call site.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    beta: Array1<S>,
    gamma: Array1<S>,
}

impl<S: Scalar> ModelParams<S> {
    /// Validates raw rate vectors into a parameter set.
    pub fn new(beta: Vec<S>, gamma: Vec<S>) -> Result<Self> {
        if beta.len() != gamma.len() || beta.is_empty() {
            return Err(Error::LengthMismatch {
                beta_len: beta.len(),
                gamma_len: gamma.len(),
            });
        }
        for (i, &b) in beta.iter().enumerate() {
            if !(b > S::zero()) {
                return Err(Error::NonPositiveBeta {
                    index: i,
                    value: b.as_f64(),
                });
            }
        }
        for (i, &g) in gamma.iter().enumerate() {
            if !(g >= S::zero()) {
                return Err(Error::NegativeGamma {
                    index: i,
                    value: g.as_f64(),
                });
            }
        }
        Ok(Self {
            beta: Array1::from_vec(beta),
            gamma: Array1::from_vec(gamma),
        })
    }

    /// Builds a parameter set without validation.
    ///
    /// Intended for degenerate limits (for example `beta = 0` pure-death
    /// processes) that the validated constructor deliberately rejects.
    pub fn new_unchecked(beta: Vec<S>, gamma: Vec<S>) -> Self {
        assert_eq!(beta.len(), gamma.len());
        Self {
            beta: Array1::from_vec(beta),
            gamma: Array1::from_vec(gamma),
        }
    }

    /// Number of groups.
    pub fn m(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &Array1<S> {
        &self.beta
    }

    pub fn gamma(&self) -> &Array1<S> {
        &self.gamma
    }
}

/// Validates `(beta, gamma)` into a [`ModelParams`].
pub fn validate_params<S: Scalar>(beta: Vec<S>, gamma: Vec<S>) -> Result<ModelParams<S>> {
    ModelParams::new(beta, gamma)
}

/// A probability vector over the `m` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<S> {
    probs: Array1<S>,
    interior: bool,
}

impl<S: Scalar> SimplexPoint<S> {
    /// Validates a vector as a simplex point (entries nonnegative, sum within
    /// `1e-12` of one).
    pub fn new(probs: Vec<S>) -> Result<Self> {
        let probs = Array1::from_vec(probs);
        if probs.is_empty() {
            return Err(Error::InvalidSimplexPoint {
                reason: "empty vector".into(),
            });
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p >= S::zero()) {
                return Err(Error::InvalidSimplexPoint {
                    reason: format!("entry {i} is negative or NaN ({p:e})"),
                });
            }
        }
        let sum: S = probs.iter().copied().sum();
        if (sum - S::one()).abs() > tol::widened(tol::SIMPLEX_SUM) {
            return Err(Error::InvalidSimplexPoint {
                reason: format!("entries sum to {sum:e}, not 1"),
            });
        }
        let interior = probs.iter().all(|&p| p >= tol::widened(tol::SIMPLEX_INTERIOR));
        Ok(Self { probs, interior })
    }

    /// Rescales a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(raw: Vec<S>) -> Result<Self> {
        let sum: S = raw.iter().copied().sum();
        if !(sum > S::zero()) {
            return Err(Error::InvalidSimplexPoint {
                reason: "nonpositive total mass".into(),
            });
        }
        Self::new(raw.into_iter().map(|p| p / sum).collect())
    }

    /// The uniform distribution on `m` groups.
    pub fn uniform(m: usize) -> Self {
        let p = S::one() / S::from_usize(m).unwrap();
        Self {
            probs: Array1::from_elem(m, p),
            interior: true,
        }
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &Array1<S> {
        &self.probs
    }

    /// True when every entry is at least `1e-12` (relative interior).
    pub fn is_interior(&self) -> bool {
        self.interior
    }
}

/// A conservative migration rate matrix (nonnegative off-diagonals, zero row
/// sums), with irreducibility determined by strong connectivity of the
/// strictly-positive-rate digraph.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix<S> {
    rates: Array2<S>,
    irreducible: bool,
}

impl<S: Scalar> GeneratorMatrix<S> {
    /// Validates a raw rate matrix.
    pub fn new(rates: Array2<S>) -> Result<Self> {
        let irreducible = check_irreducible(&rates)?;
        Ok(Self { rates, irreducible })
    }

    /// Builds a generator from off-diagonal rates, overwriting the diagonal
    /// with the negated row sums so the result is exactly conservative.
    pub fn from_off_diagonal(mut rates: Array2<S>) -> Result<Self> {
        let n = rates.nrows();
        if rates.ncols() != n {
            return Err(Error::MalformedGenerator {
                reason: format!("matrix is {}x{}, not square", n, rates.ncols()),
            });
        }
        for i in 0..n {
            let mut sum = S::zero();
            for j in 0..n {
                if j != i {
                    sum = sum + rates[[i, j]];
                }
            }
            rates[[i, i]] = -sum;
        }
        Self::new(rates)
    }

    /// The zero generator (no migration). Irreducible only for `m = 1`.
    pub fn zero(m: usize) -> Self {
        Self {
            rates: Array2::zeros((m, m)),
            irreducible: m == 1,
        }
    }

    pub fn m(&self) -> usize {
        self.rates.nrows()
    }

    pub fn rates(&self) -> &Array2<S> {
        &self.rates
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }
}

/// Checks generator shape (nonnegative off-diagonals, row sums within
/// `1e-12` of zero) and returns whether the positive-rate digraph is
/// strongly connected. A `1x1` zero matrix counts as irreducible.
pub fn check_irreducible<S: Scalar>(rates: &Array2<S>) -> Result<bool> {
    let n = rates.nrows();
    if rates.ncols() != n || n == 0 {
        return Err(Error::MalformedGenerator {
            reason: format!("matrix is {}x{}, not square and nonempty", n, rates.ncols()),
        });
    }
    for i in 0..n {
        let mut sum = S::zero();
        for j in 0..n {
            let x = rates[[i, j]];
            if j != i && !(x >= S::zero()) {
                return Err(Error::MalformedGenerator {
                    reason: format!("off-diagonal ({i},{j}) is negative or NaN ({x:e})"),
                });
            }
            sum = sum + x;
        }
        if sum.abs() > tol::widened(tol::GENERATOR_ROW_SUM) {
            return Err(Error::MalformedGenerator {
                reason: format!("row {i} sums to {sum:e}, not 0"),
            });
        }
    }
    if n == 1 {
        return Ok(true);
    }
    Ok(reaches_all(rates, false) && reaches_all(rates, true))
}

/// Breadth-first reachability from node 0 along strictly positive rates,
/// optionally on the transposed graph. Strong connectivity is reachability
/// in both orientations.
pub(crate) fn reaches_all<S: Scalar>(rates: &Array2<S>, transpose: bool) -> bool {
    let n = rates.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if j == i || seen[j] {
                continue;
            }
            let rate = if transpose {
                rates[[j, i]]
            } else {
                rates[[i, j]]
            };
            if rate > S::zero() {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == n
}

/// Solves `pi G = 0`, `pi . 1 = 1` by replacing the last balance equation
/// with the normalization and running a partial-pivot direct solve.
pub fn stationary_distribution<S: Scalar>(g: &GeneratorMatrix<S>) -> Result<SimplexPoint<S>> {
    if !g.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = g.m();
    let mut sys = Array2::zeros((n, n));
    for j in 0..n - 1 {
        for i in 0..n {
            sys[[j, i]] = g.rates()[[i, j]];
        }
    }
    for i in 0..n {
        sys[[n - 1, i]] = S::one();
    }
    let mut rhs = Array1::zeros(n);
    rhs[n - 1] = S::one();
    let pi = linalg::factor(&sys)?.solve(rhs.view());
    if pi.iter().any(|&p| !(p > S::zero())) {
        // cannot happen for an irreducible generator unless the solve broke down
        return Err(Error::SingularMatrix);
    }
    SimplexPoint::new(pi.to_vec())
}

/// Nonnegative infective counts per group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfectiveState {
    counts: Vec<u64>,
}

impl InfectiveState {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// A single infective in group `index`.
    pub fn single(m: usize, index: usize) -> Self {
        let mut counts = vec![0; m];
        counts[index] = 1;
        Self { counts }
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
