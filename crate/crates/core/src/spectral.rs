//! The branching-process mean generator `A(pi, Q)`, the next-generation
//! matrix `Lambda(pi, Q)`, dominant eigenpairs, growth-rate gradients, and
//! the mean matrix semigroup `M(t) = exp(A t)`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, GeneratorMatrix, ModelParams, SimplexPoint};
use crate::scalar::{real, Scalar};
use crate::tol;

/// A square matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerMatrix<S> {
    entries: Array2<S>,
    irreducible: bool,
}

impl<S: Scalar> MetzlerMatrix<S> {
    /// Validates the Metzler property and records irreducibility of the
    /// positive off-diagonal digraph.
    pub fn new(entries: Array2<S>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: entries.ncols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && !(entries[[i, j]] >= S::zero()) {
                    return Err(Error::InvalidArgument {
                        reason: format!(
                            "entry ({i},{j}) is negative or NaN; matrix is not Metzler"
                        ),
                    });
                }
            }
        }
        let irreducible =
            n == 1 || (model::reaches_all(&entries, false) && model::reaches_all(&entries, true));
        Ok(Self {
            entries,
            irreducible,
        })
    }

    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<S> {
        &self.entries
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }
}

/// Dominant eigenvalue with strictly positive right (`v`) and left (`w`)
/// eigenvectors, normalized so `max_i v_i = 1` and `v . w = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair<S> {
    pub value: S,
    pub right: Array1<S>,
    pub left: Array1<S>,
}

/// Builds `A(pi, Q) = diag(beta) diag(pi) - diag(gamma) + Q`.
pub fn build_a<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<MetzlerMatrix<S>> {
    let m = params.m();
    if pi.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: pi.m(),
        });
    }
    if q.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.m(),
        });
    }
    let mut entries = q.rates().clone();
    for i in 0..m {
        entries[[i, i]] =
            entries[[i, i]] + params.beta()[i] * pi.probs()[i] - params.gamma()[i];
    }
    // the off-diagonal digraph is Q's, so irreducibility carries over
    Ok(MetzlerMatrix {
        entries,
        irreducible: q.is_irreducible(),
    })
}

struct PowerOutcome<S> {
    value: S,
    right: Array1<S>,
    left: Array1<S>,
    converged: bool,
    iterations: u64,
}

/// Power iteration on the shifted matrix `B = A + sI` and its transpose,
/// with `s = 1 + max_i |A_ii|` so that `B` is nonnegative and primitive.
/// The eigenvalue estimate is the two-sided Rayleigh quotient; convergence
/// requires a relative value change below `1e-12` and both eigenvector
/// residuals below `1e-10 * ||A||_inf`.
fn power_iterate<S: Scalar>(a: &Array2<S>, max_iter: u64) -> PowerOutcome<S> {
    let n = a.nrows();
    let mut s = S::zero();
    for i in 0..n {
        s = s.max(a[[i, i]].abs());
    }
    s = s + S::one();
    let mut b = a.clone();
    for i in 0..n {
        b[[i, i]] = b[[i, i]] + s;
    }

    if n == 1 {
        return PowerOutcome {
            value: a[[0, 0]],
            right: Array1::ones(1),
            left: Array1::ones(1),
            converged: true,
            iterations: 0,
        };
    }

    let norm_a = linalg::inf_norm(a);
    let value_tol = tol::widened::<S>(tol::EIG_VALUE_REL);
    let residual_tol = tol::widened::<S>(tol::EIG_RESIDUAL_REL) * norm_a;

    let start = S::one() / S::from_usize(n).unwrap();
    let mut v = Array1::from_elem(n, start);
    let mut w = Array1::from_elem(n, start);
    let mut bv: Array1<S> = Array1::zeros(n);
    let mut bw: Array1<S> = Array1::zeros(n);

    let mut rho = S::zero();
    let mut rho_prev = S::infinity();
    let mut converged = false;
    let mut iterations = 0;

    // hand-rolled matvecs: this loop runs hot inside the minimax searches
    let b_rows = b.as_slice().expect("freshly built matrix is contiguous");
    while iterations < max_iter {
        iterations += 1;
        for i in 0..n {
            let row = &b_rows[i * n..(i + 1) * n];
            let mut acc_v = S::zero();
            for j in 0..n {
                acc_v = acc_v + row[j] * v[j];
            }
            bv[i] = acc_v;
        }
        for i in 0..n {
            let mut acc_w = S::zero();
            for j in 0..n {
                acc_w = acc_w + b_rows[j * n + i] * w[j];
            }
            bw[i] = acc_w;
        }

        let mut num = S::zero();
        let mut den = S::zero();
        for i in 0..n {
            num = num + w[i] * bv[i];
            den = den + w[i] * v[i];
        }
        rho = num / den;

        let mut res_v = S::zero();
        let mut res_w = S::zero();
        for i in 0..n {
            res_v = res_v.max((bv[i] - rho * v[i]).abs());
            res_w = res_w.max((bw[i] - rho * w[i]).abs());
        }
        if (rho - rho_prev).abs() <= value_tol * rho.abs()
            && res_v <= residual_tol
            && res_w <= residual_tol
        {
            converged = true;
            break;
        }
        rho_prev = rho;

        let scale_v = linalg::max_abs(bv.view());
        let scale_w = linalg::max_abs(bw.view());
        for i in 0..n {
            v[i] = bv[i] / scale_v;
            w[i] = bw[i] / scale_w;
        }
    }

    // normalize so max_i v_i = 1, then v . w = 1
    let vmax = linalg::max_abs(v.view());
    v.mapv_inplace(|x| x / vmax);
    let dot = v.dot(&w);
    w.mapv_inplace(|x| x / dot);

    PowerOutcome {
        value: rho - s,
        right: v,
        left: w,
        converged,
        iterations,
    }
}

/// Iteration budget of the lenient path. When the dominant pair is
/// separated by a gap `g`, power iteration contracts like `(1 - g)^k`, so a
/// stalled run means `g` is tiny and the Rayleigh estimate is already within
/// the cluster width of the true value. A short budget therefore trades
/// certified residuals for speed without losing value accuracy beyond `g`.
const LENIENT_MAX_ITER: u64 = 2_000;

fn perron_impl<S: Scalar>(a: &MetzlerMatrix<S>, strict: bool) -> Result<SpectralPair<S>> {
    if !a.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let budget = if strict {
        tol::EIG_MAX_ITER
    } else {
        LENIENT_MAX_ITER
    };
    let out = power_iterate(a.entries(), budget);
    if strict && !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
            estimate: out.value.as_f64(),
        });
    }
    Ok(SpectralPair {
        value: out.value,
        right: out.right,
        left: out.left,
    })
}

/// Dominant eigenvalue and positive left/right eigenvectors of an
/// irreducible Metzler matrix.
pub fn perron<S: Scalar>(a: &MetzlerMatrix<S>) -> Result<SpectralPair<S>> {
    perron_impl(a, true)
}

/// Like [`perron`] but accepts budget exhaustion and returns the best
/// estimate. Slow convergence means a near-degenerate dominant pair, in
/// which case the value estimate is still accurate to roughly the gap;
/// the minimax searches run on top of this.
pub(crate) fn perron_lenient<S: Scalar>(a: &MetzlerMatrix<S>) -> Result<SpectralPair<S>> {
    perron_impl(a, false)
}

/// Expected growth rate `tau(pi, Q)`: the dominant eigenvalue of `A(pi, Q)`.
pub fn tau<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<S> {
    Ok(perron(&build_a(params, pi, q)?)?.value)
}

pub(crate) fn tau_lenient<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<S> {
    Ok(perron_lenient(&build_a(params, pi, q)?)?.value)
}

/// Gradient of `tau` with respect to `pi`:
/// `d tau / d pi_i = beta_i w_i v_i / (w . v)`.
pub fn tau_gradient<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<Array1<S>> {
    let pair = perron(&build_a(params, pi, q)?)?;
    let den = pair.left.dot(&pair.right);
    let m = params.m();
    let mut grad = Array1::zeros(m);
    for i in 0..m {
        grad[i] = params.beta()[i] * pair.left[i] * pair.right[i] / den;
    }
    Ok(grad)
}

/// Next-generation matrix
/// `Lambda(pi, Q) = (diag(gamma) - Q)^-1 diag(beta) diag(pi)`,
/// computed with one LU factorization and `m` column solves.
pub fn build_lambda<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<Array2<S>> {
    let m = params.m();
    if pi.m() != m || q.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: pi.m().max(q.m()),
        });
    }
    if !q.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let mut residence = q.rates().mapv(|x| -x);
    for i in 0..m {
        residence[[i, i]] = residence[[i, i]] + params.gamma()[i];
    }
    let lu = linalg::factor(&residence).map_err(|e| match e {
        Error::SingularMatrix => Error::SingularResidenceMatrix,
        other => other,
    })?;
    let mut rhs = Array2::zeros((m, m));
    for j in 0..m {
        rhs[[j, j]] = params.beta()[j] * pi.probs()[j];
    }
    let mut lambda = lu.solve_columns(&rhs);
    // The exact matrix is entrywise nonnegative; scrub sign noise from the
    // solve and treat anything beyond rounding scale as a failed inverse.
    let scale = lambda.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()));
    let floor = -real::<S>(64.0) * S::epsilon() * scale;
    for e in lambda.iter_mut() {
        if *e < S::zero() {
            if *e < floor {
                return Err(Error::SingularResidenceMatrix);
            }
            *e = S::zero();
        }
    }
    Ok(lambda)
}

fn lambda_spectral_radius<S: Scalar>(
    pi: &SimplexPoint<S>,
    lambda: &Array2<S>,
    strict: bool,
) -> Result<S> {
    let m = lambda.nrows();
    let support: Vec<usize> = (0..m).filter(|&i| pi.probs()[i] > S::zero()).collect();
    let reduced = if support.len() == m {
        lambda.clone()
    } else {
        // columns of zero-probability groups vanish; the spectral radius
        // lives on the principal submatrix of the support
        let k = support.len();
        Array2::from_shape_fn((k, k), |(r, c)| lambda[[support[r], support[c]]])
    };
    let metzler = MetzlerMatrix::new(reduced)?;
    let pair = perron_impl(&metzler, strict)?;
    Ok(pair.value)
}

/// Basic reproduction number `R0(pi, Q)`: the spectral radius of
/// `Lambda(pi, Q)`.
pub fn r0<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<S> {
    let lambda = build_lambda(params, pi, q)?;
    lambda_spectral_radius(pi, &lambda, true)
}

pub(crate) fn r0_lenient<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
) -> Result<S> {
    let lambda = build_lambda(params, pi, q)?;
    lambda_spectral_radius(pi, &lambda, false)
}

/// Mean matrix semigroup `M(t) = exp(A(pi, Q) t)` by uniformization, which
/// keeps the result exactly nonnegative.
pub fn mean_matrix<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    t: S,
) -> Result<Array2<S>> {
    if !(t >= S::zero()) {
        return Err(Error::InvalidArgument {
            reason: format!("time must be nonnegative, got {t:e}"),
        });
    }
    let a = build_a(params, pi, q)?;
    Ok(expm_uniform(a.entries(), t))
}

/// `exp(A t) = e^{-st} sum_k (t^k / k!) B^k` with `B = A + sI`,
/// `s = 1 + max_i |A_ii|`, truncated when the Poisson tail mass drops below
/// `1e-12`. Large `s t` is halved recursively and squared back, which
/// preserves nonnegativity.
fn expm_uniform<S: Scalar>(a: &Array2<S>, t: S) -> Array2<S> {
    let n = a.nrows();
    let mut max_diag = S::zero();
    for i in 0..n {
        max_diag = max_diag.max(a[[i, i]].abs());
    }
    let s = S::one() + max_diag;
    let st = s * t;
    if st > real(64.0) {
        let half = expm_uniform(a, t / real(2.0));
        return half.dot(&half);
    }

    // P = B / s is nonnegative with row sums 1 + (beta_i pi_i - gamma_i)/s
    let mut p = a.mapv(|x| x / s);
    for i in 0..n {
        p[[i, i]] = p[[i, i]] + S::one();
    }

    let tail = real::<S>(tol::UNIFORMIZATION_TAIL);
    let mut weight = (-st).exp(); // Poisson(st) pmf at k = 0
    let mut cumulative = weight;
    let mut pow = Array2::eye(n);
    let mut acc = pow.mapv(|x| x * weight);
    let mut k = 0u64;
    loop {
        // The Poisson tail criterion alone is not enough: dropped terms are
        // weighted by (B/s)^k whose entries grow when row sums exceed one,
        // so also run the series down to rounding level.
        let acc_max = acc.iter().fold(S::zero(), |m, &x| m.max(x));
        let pow_max = pow.iter().fold(S::zero(), |m, &x| m.max(x));
        let tail_done = S::one() - cumulative <= tail;
        let terms_done = weight * pow_max <= S::epsilon() * acc_max;
        if (tail_done && terms_done) || k > 10_000 {
            break;
        }
        k += 1;
        pow = pow.dot(&p);
        weight = weight * st / S::from_u64(k).unwrap();
        acc.scaled_add(weight, &pow);
        cumulative = cumulative + weight;
    }
    acc
}
