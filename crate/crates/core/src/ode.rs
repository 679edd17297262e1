//! Deterministic metapopulation models: density-dependent and
//! frequency-dependent SIS systems, adaptive integration, the
//! disease-free-equilibrium spectrum decomposition, and next-generation
//! matrices.

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, GeneratorMatrix, ModelParams, SimplexPoint};
use crate::scalar::{real, Scalar};
use crate::spectral;

/// Susceptible and infective densities per group.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState<S> {
    pub x: Array1<S>,
    pub y: Array1<S>,
}

impl<S: Scalar> FluidState<S> {
    pub fn new(x: Array1<S>, y: Array1<S>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    fn pack(&self) -> Array1<S> {
        let m = self.m();
        Array1::from_shape_fn(2 * m, |k| if k < m { self.x[k] } else { self.y[k - m] })
    }

    fn unpack(flat: &Array1<S>) -> Self {
        let m = flat.len() / 2;
        Self {
            x: Array1::from_shape_fn(m, |i| flat[i]),
            y: Array1::from_shape_fn(m, |i| flat[m + i]),
        }
    }
}

/// Contact-rate form of the deterministic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactVariant {
    /// Incidence `beta_i x_i y_i`.
    Density,
    /// Incidence `beta_i x_i y_i / (x_i + y_i)`, zero on empty groups.
    Frequency,
}

fn check_dims<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    state: &FluidState<S>,
) -> Result<usize> {
    let m = params.m();
    if r.m() != m || q.m() != m || state.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: r.m().max(q.m()).max(state.m()),
        });
    }
    Ok(m)
}

/// Density-dependent right-hand side:
/// `dx_i = (R^T x)_i + gamma_i y_i - beta_i x_i y_i`,
/// `dy_i = (Q^T y)_i - gamma_i y_i + beta_i x_i y_i`.
/// Total mass is conserved exactly (both migration matrices have zero row
/// sums and the incidence terms cancel pairwise).
pub fn rhs_density<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    state: &FluidState<S>,
) -> Result<FluidState<S>> {
    let m = check_dims(params, r, q, state)?;
    let mut dx = Array1::zeros(m);
    let mut dy = Array1::zeros(m);
    for i in 0..m {
        let mut migrate_x = S::zero();
        let mut migrate_y = S::zero();
        for j in 0..m {
            migrate_x = migrate_x + r.rates()[[j, i]] * state.x[j];
            migrate_y = migrate_y + q.rates()[[j, i]] * state.y[j];
        }
        let incidence = params.beta()[i] * state.x[i] * state.y[i];
        let recovery = params.gamma()[i] * state.y[i];
        dx[i] = migrate_x + recovery - incidence;
        dy[i] = migrate_y - recovery + incidence;
    }
    Ok(FluidState { x: dx, y: dy })
}

/// Frequency-dependent right-hand side with incidence
/// `beta_i x_i y_i / (x_i + y_i)`; an empty group contributes zero.
pub fn rhs_frequency<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    state: &FluidState<S>,
) -> Result<FluidState<S>> {
    let m = check_dims(params, r, q, state)?;
    let mut dx = Array1::zeros(m);
    let mut dy = Array1::zeros(m);
    for i in 0..m {
        let mut migrate_x = S::zero();
        let mut migrate_y = S::zero();
        for j in 0..m {
            migrate_x = migrate_x + r.rates()[[j, i]] * state.x[j];
            migrate_y = migrate_y + q.rates()[[j, i]] * state.y[j];
        }
        let mass = state.x[i] + state.y[i];
        let incidence = if mass > S::zero() {
            params.beta()[i] * state.x[i] * state.y[i] / mass
        } else {
            S::zero()
        };
        let recovery = params.gamma()[i] * state.y[i];
        dx[i] = migrate_x + recovery - incidence;
        dy[i] = migrate_y - recovery + incidence;
    }
    Ok(FluidState { x: dx, y: dy })
}

// ---------------------------------------------------------------------------
// adaptive Runge-Kutta 4(5), Dormand-Prince coefficients
// ---------------------------------------------------------------------------

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dy/dt = f(t, y)` from `t = 0` through the increasing sample
/// times, returning the state at each of them. Embedded 4(5) pair with
/// relative tolerance `rtol` and absolute tolerance `rtol / 100`.
pub fn integrate_flat<S, F>(
    mut f: F,
    y0: &Array1<S>,
    sample_times: &[S],
    rtol: S,
) -> Result<Vec<Array1<S>>>
where
    S: Scalar,
    F: FnMut(S, &Array1<S>) -> Array1<S>,
{
    if sample_times.is_empty() {
        return Ok(Vec::new());
    }
    for w in sample_times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument {
                reason: "sample times must be strictly increasing".into(),
            });
        }
    }
    if !(sample_times[0] >= S::zero()) {
        return Err(Error::InvalidArgument {
            reason: "sample times must be nonnegative".into(),
        });
    }
    let atol = rtol * real::<S>(1e-2);
    let t_end = *sample_times.last().unwrap();
    let n = y0.len();

    let mut t = S::zero();
    let mut y = y0.clone();
    let mut h = (t_end / real(100.0)).max(real(1e-8));
    let mut out = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;

    // t = 0 may itself be a sample point
    while next_sample < sample_times.len() && sample_times[next_sample] == S::zero() {
        out.push(y.clone());
        next_sample += 1;
    }

    let h_min_scale = real::<S>(16.0) * S::epsilon();
    let mut k: Vec<Array1<S>> = vec![Array1::zeros(n); 7];

    while next_sample < sample_times.len() {
        let target = sample_times[next_sample];
        let h_step = h.min(target - t);

        k[0] = f(t, &y);
        for stage in 1..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = real::<S>(DP_A[stage - 1][j]);
                if a != S::zero() {
                    arg.scaled_add(h_step * a, kj);
                }
            }
            let ts = t + h_step * real(DP_C[stage]);
            k[stage] = f(ts, &arg);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            let b5 = real::<S>(DP_B5[j]);
            let b4 = real::<S>(DP_B4[j]);
            if b5 != S::zero() {
                y5.scaled_add(h_step * b5, kj);
            }
            if b4 != S::zero() {
                y4.scaled_add(h_step * b4, kj);
            }
        }

        let mut err = S::zero();
        for i in 0..n {
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max((y5[i] - y4[i]).abs() / scale);
        }

        if err <= S::one() {
            t = t + h_step;
            y = y5;
            if t >= target - h_min_scale * target.abs().max(S::one()) {
                t = target;
                out.push(y.clone());
                next_sample += 1;
            }
        }

        let factor = if err > S::zero() {
            real::<S>(0.9) * err.powf(-real::<S>(0.2))
        } else {
            real::<S>(5.0)
        };
        h = h_step * factor.max(real(0.2)).min(real(5.0));
        if h < h_min_scale * t.abs().max(S::one()) {
            return Err(Error::StepSizeUnderflow { t: t.as_f64() });
        }
    }
    Ok(out)
}

/// Integrates a metapopulation right-hand side through the sample times.
pub fn integrate<S, F>(
    mut rhs: F,
    initial: &FluidState<S>,
    sample_times: &[S],
    rtol: S,
) -> Result<Vec<FluidState<S>>>
where
    S: Scalar,
    F: FnMut(&FluidState<S>) -> Result<FluidState<S>>,
{
    let mut failure: Option<Error> = None;
    let flat0 = initial.pack();
    let states = integrate_flat(
        |_t, flat: &Array1<S>| {
            let state = FluidState::unpack(flat);
            match rhs(&state) {
                Ok(d) => d.pack(),
                Err(e) => {
                    failure.get_or_insert(e);
                    Array1::zeros(flat.len())
                }
            }
        },
        &flat0,
        sample_times,
        rtol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(states.iter().map(FluidState::unpack).collect())
}

/// Analytic Jacobian of the density-dependent system at an arbitrary state,
/// ordered `(x_1..x_m, y_1..y_m)`.
pub fn jacobian_density<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
    state: &FluidState<S>,
) -> Result<Array2<S>> {
    let m = check_dims(params, r, q, state)?;
    let mut jac = Array2::zeros((2 * m, 2 * m));
    for i in 0..m {
        for j in 0..m {
            jac[[i, j]] = r.rates()[[j, i]];
            jac[[m + i, m + j]] = q.rates()[[j, i]];
        }
        let beta_xy = params.beta()[i];
        jac[[i, i]] = jac[[i, i]] - beta_xy * state.y[i];
        jac[[i, m + i]] = params.gamma()[i] - beta_xy * state.x[i];
        jac[[m + i, i]] = beta_xy * state.y[i];
        jac[[m + i, m + i]] =
            jac[[m + i, m + i]] - params.gamma()[i] + beta_xy * state.x[i];
    }
    Ok(jac)
}

/// Spectrum decomposition at the disease-free equilibrium `(pi, 0)` with
/// `pi` the stationary law of `R`: eigenvalues of the mean generator
/// `A(pi, Q)`, eigenvalues of `R` with the conserved-mass zero removed, and
/// the directly computed spectrum of the full `2m x 2m` Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct DfeSpectrum<S> {
    pub set_a: Vec<Complex<S>>,
    pub set_r_nonzero: Vec<Complex<S>>,
    pub jacobian: Vec<Complex<S>>,
}

impl<S: Scalar> DfeSpectrum<S> {
    /// The union predicted by the block structure: `spec(A)`, the nonzero
    /// part of `spec(R)`, and the structural zero of mass conservation.
    pub fn predicted_union(&self) -> Vec<Complex<S>> {
        let mut union = self.set_a.clone();
        union.extend(self.set_r_nonzero.iter().cloned());
        union.push(Complex::new(S::zero(), S::zero()));
        sort_complex(&mut union);
        union
    }

    /// Maximum componentwise distance between the sorted predicted union and
    /// the sorted Jacobian spectrum.
    pub fn union_mismatch(&self) -> S {
        let predicted = self.predicted_union();
        let mut direct = self.jacobian.clone();
        sort_complex(&mut direct);
        predicted
            .iter()
            .zip(direct.iter())
            .map(|(p, d)| (p.re - d.re).abs().max((p.im - d.im).abs()))
            .fold(S::zero(), |a, b| a.max(b))
    }
}

/// Sorts complex values by real part, then imaginary part.
pub fn sort_complex<S: Scalar>(values: &mut [Complex<S>]) {
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .expect("eigenvalues are finite")
            .then(a.im.partial_cmp(&b.im).expect("eigenvalues are finite"))
    });
}

/// Computes the DFE spectrum decomposition for irreducible `R`, `Q`.
pub fn dfe_spectrum_decomposition<S: Scalar>(
    params: &ModelParams<S>,
    r: &GeneratorMatrix<S>,
    q: &GeneratorMatrix<S>,
) -> Result<DfeSpectrum<S>> {
    let pi = model::stationary_distribution(r)?;
    let a = spectral::build_a(params, &pi, q)?;
    let set_a = eig::eigenvalues(a.entries())?;
    let mut set_r = eig::eigenvalues(r.rates())?;
    // drop the eigenvalue nearest zero: the conserved-mass mode of R
    let zero_pos = set_r
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.norm_sqr()
                .partial_cmp(&b.norm_sqr())
                .expect("finite eigenvalues")
        })
        .map(|(i, _)| i)
        .expect("generator has at least one eigenvalue");
    set_r.remove(zero_pos);
    let dfe = FluidState {
        x: pi.probs().clone(),
        y: Array1::zeros(params.m()),
    };
    let jac = jacobian_density(params, r, q, &dfe)?;
    let jacobian = eig::eigenvalues(&jac)?;
    Ok(DfeSpectrum {
        set_a,
        set_r_nonzero: set_r,
        jacobian,
    })
}

/// Next-generation matrix of the deterministic model: the transpose of
/// `Lambda(pi, Q)` in the density-dependent variant, and
/// `diag(beta) (diag(gamma) - Q^T)^-1` in the frequency-dependent variant
/// (which does not involve `pi` at all).
pub fn ngm_ode<S: Scalar>(
    params: &ModelParams<S>,
    pi: &SimplexPoint<S>,
    q: &GeneratorMatrix<S>,
    variant: ContactVariant,
) -> Result<Array2<S>> {
    let m = params.m();
    for i in 0..m {
        if !(params.gamma()[i] > S::zero()) {
            return Err(Error::ZeroRecoveryGroup { index: i });
        }
    }
    match variant {
        ContactVariant::Density => Ok(spectral::build_lambda(params, pi, q)?.t().to_owned()),
        ContactVariant::Frequency => {
            let mut residence_t = Array2::zeros((m, m));
            for i in 0..m {
                for j in 0..m {
                    residence_t[[i, j]] = -q.rates()[[j, i]];
                }
                residence_t[[i, i]] = residence_t[[i, i]] + params.gamma()[i];
            }
            let lu = linalg::factor(&residence_t).map_err(|e| match e {
                Error::SingularMatrix => Error::SingularResidenceMatrix,
                other => other,
            })?;
            let inv = lu.solve_columns(&Array2::eye(m));
            let mut out = inv;
            for i in 0..m {
                for j in 0..m {
                    out[[i, j]] = params.beta()[i] * out[[i, j]];
                }
            }
            Ok(out)
        }
    }
}

/// Dense complex eigensolver for small matrices: Householder reduction to
/// Hessenberg form followed by shifted QR iteration. Kept local to this
/// module; everything else in the crate only ever needs Perron pairs.
pub(crate) mod eig {
    use super::*;

    type C<S> = Complex<S>;

    /// All eigenvalues of a real square matrix.
    pub fn eigenvalues<S: Scalar>(a: &Array2<S>) -> Result<Vec<C<S>>> {
        let n = a.nrows();
        if a.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        if n == 1 {
            return Ok(vec![C::new(a[[0, 0]], S::zero())]);
        }
        let mut h: Vec<C<S>> = a.iter().map(|&x| C::new(x, S::zero())).collect();
        hessenberg(&mut h, n);
        let mut vals = qr_eigenvalues(&mut h, n)?;
        symmetrize_conjugates(&mut vals);
        Ok(vals)
    }

    /// The input matrix is real, so the spectrum is closed under
    /// conjugation; the complex QR iteration returns pair members with
    /// independent rounding. Zero out eps-level imaginary parts and average
    /// surviving pairs into exact conjugates so multiset comparisons by
    /// sorted (re, im) are stable.
    fn symmetrize_conjugates<S: Scalar>(vals: &mut [C<S>]) {
        let scale = vals
            .iter()
            .map(|z| z.norm())
            .fold(S::zero(), |a, b| a.max(b))
            .max(S::min_positive_value());
        let im_tol = scale * crate::tol::widened::<S>(1e-10);
        for z in vals.iter_mut() {
            if z.im.abs() <= im_tol {
                z.im = S::zero();
            }
        }
        let n = vals.len();
        let mut used = vec![false; n];
        for i in 0..n {
            if used[i] || !(vals[i].im > S::zero()) {
                continue;
            }
            let mut partner = None;
            let mut best = S::infinity();
            for (j, candidate) in vals.iter().enumerate() {
                if i == j || used[j] || !(candidate.im < S::zero()) {
                    continue;
                }
                let dist = (*candidate - vals[i].conj()).norm();
                if dist < best {
                    best = dist;
                    partner = Some(j);
                }
            }
            if let Some(j) = partner {
                let re = (vals[i].re + vals[j].re) * real::<S>(0.5);
                let im = (vals[i].im - vals[j].im) * real::<S>(0.5);
                vals[i] = C::new(re, im);
                vals[j] = C::new(re, -im);
                used[i] = true;
                used[j] = true;
            }
        }
    }

    fn at<S: Scalar>(h: &[C<S>], n: usize, i: usize, j: usize) -> C<S> {
        h[i * n + j]
    }

    /// Householder reduction to upper Hessenberg form (complex arithmetic).
    fn hessenberg<S: Scalar>(h: &mut [C<S>], n: usize) {
        for k in 0..n.saturating_sub(2) {
            // build the reflector that zeroes column k below the subdiagonal
            let mut norm_sq = S::zero();
            for i in k + 1..n {
                norm_sq = norm_sq + at(h, n, i, k).norm_sqr();
            }
            let norm = norm_sq.sqrt();
            if norm == S::zero() {
                continue;
            }
            let x0 = at(h, n, k + 1, k);
            let phase = if x0.norm() > S::zero() {
                x0 / C::new(x0.norm(), S::zero())
            } else {
                C::new(S::one(), S::zero())
            };
            let alpha = -phase * C::new(norm, S::zero());
            let mut v: Vec<C<S>> = (k + 1..n).map(|i| at(h, n, i, k)).collect();
            v[0] = v[0] - alpha;
            let vnorm_sq: S = v.iter().map(|z| z.norm_sqr()).sum();
            if vnorm_sq == S::zero() {
                continue;
            }
            let beta = real::<S>(2.0) / vnorm_sq;

            // H <- P H with P = I - beta v v^H acting on rows k+1..n
            for col in 0..n {
                let mut dot = C::new(S::zero(), S::zero());
                for (r, vi) in v.iter().enumerate() {
                    dot = dot + vi.conj() * at(h, n, k + 1 + r, col);
                }
                let scale = dot * C::new(beta, S::zero());
                for (r, vi) in v.iter().enumerate() {
                    h[(k + 1 + r) * n + col] = at(h, n, k + 1 + r, col) - *vi * scale;
                }
            }
            // H <- H P acting on columns k+1..n
            for row in 0..n {
                let mut dot = C::new(S::zero(), S::zero());
                for (c, vi) in v.iter().enumerate() {
                    dot = dot + at(h, n, row, k + 1 + c) * *vi;
                }
                let scale = dot * C::new(beta, S::zero());
                for (c, vi) in v.iter().enumerate() {
                    h[row * n + (k + 1 + c)] = at(h, n, row, k + 1 + c) - scale * vi.conj();
                }
            }
        }
    }

    /// Complex Givens rotation sending `(f, g)` to `(r, 0)`.
    fn givens<S: Scalar>(f: C<S>, g: C<S>) -> (S, C<S>) {
        if g.norm_sqr() == S::zero() {
            return (S::one(), C::new(S::zero(), S::zero()));
        }
        if f.norm_sqr() == S::zero() {
            let gn = g.norm();
            return (S::zero(), g.conj() / C::new(gn, S::zero()));
        }
        let fn_ = f.norm();
        let d = (f.norm_sqr() + g.norm_sqr()).sqrt();
        let c = fn_ / d;
        let s = (f / C::new(fn_, S::zero())) * g.conj() / C::new(d, S::zero());
        (c, s)
    }

    /// Shifted QR iteration with deflation on a Hessenberg matrix.
    fn qr_eigenvalues<S: Scalar>(h: &mut [C<S>], n: usize) -> Result<Vec<C<S>>> {
        let mut eigs: Vec<C<S>> = Vec::with_capacity(n);
        let mut active = n;
        let mut iterations_on_block = 0usize;
        let mut total_iterations = 0usize;
        let eps = S::epsilon();

        while active > 0 {
            if active == 1 {
                eigs.push(at(h, n, 0, 0));
                break;
            }
            // deflate negligible subdiagonals from the bottom
            let mut l = active - 1;
            while l > 0 {
                let sub = at(h, n, l, l - 1).norm();
                let diag_scale = at(h, n, l - 1, l - 1).norm() + at(h, n, l, l).norm();
                if sub <= eps * diag_scale.max(S::min_positive_value()) {
                    break;
                }
                l -= 1;
            }
            if l == active - 1 {
                eigs.push(at(h, n, l, l));
                active -= 1;
                iterations_on_block = 0;
                continue;
            }
            if total_iterations > 200 * n {
                return Err(Error::EigenvalueFailure);
            }

            // Wilkinson shift from the trailing 2x2 of the active block;
            // occasional exceptional shifts break symmetry-induced cycles
            let p = active - 1;
            let shift = if iterations_on_block > 0 && iterations_on_block % 12 == 0 {
                let magnitude =
                    at(h, n, p, p - 1).norm() + if p >= 2 { at(h, n, p - 1, p - 2).norm() } else { S::zero() };
                C::new(magnitude, S::zero())
            } else {
                let a11 = at(h, n, p - 1, p - 1);
                let a12 = at(h, n, p - 1, p);
                let a21 = at(h, n, p, p - 1);
                let a22 = at(h, n, p, p);
                let tr_half = (a11 + a22) * C::new(real(0.5), S::zero());
                let det = a11 * a22 - a12 * a21;
                let disc = (tr_half * tr_half - det).sqrt();
                let mu1 = tr_half + disc;
                let mu2 = tr_half - disc;
                if (mu1 - a22).norm() <= (mu2 - a22).norm() {
                    mu1
                } else {
                    mu2
                }
            };

            // explicit QR step on the active block [l, active)
            for i in l..active {
                h[i * n + i] = at(h, n, i, i) - shift;
            }
            let mut rotations: Vec<(S, C<S>)> = Vec::with_capacity(active - l - 1);
            for i in l..active - 1 {
                let (c, s) = givens(at(h, n, i, i), at(h, n, i + 1, i));
                for col in i..active {
                    let hi = at(h, n, i, col);
                    let hj = at(h, n, i + 1, col);
                    h[i * n + col] = hi * C::new(c, S::zero()) + hj * s;
                    h[(i + 1) * n + col] = -hi * s.conj() + hj * C::new(c, S::zero());
                }
                rotations.push((c, s));
            }
            for (i, (c, s)) in rotations.iter().enumerate() {
                let col = l + i;
                for row in l..(col + 2).min(active) {
                    let hi = at(h, n, row, col);
                    let hj = at(h, n, row, col + 1);
                    h[row * n + col] = hi * C::new(*c, S::zero()) + hj * s.conj();
                    h[row * n + col + 1] = -hi * *s + hj * C::new(*c, S::zero());
                }
            }
            for i in l..active {
                h[i * n + i] = at(h, n, i, i) + shift;
            }
            iterations_on_block += 1;
            total_iterations += 1;
        }
        Ok(eigs)
    }
}
