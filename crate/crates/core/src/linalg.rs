//! Small dense linear algebra: LU factorization with partial pivoting.
//!
//! Group counts are small (the intended models have m of order 10 or less),
//! so a direct dense solve is both exact enough and fast enough everywhere a
//! linear system appears.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// LU factorization `PA = LU` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<S> {
    lu: Array2<S>,
    perm: Vec<usize>,
}

/// Factorizes `a`; fails with [`Error::SingularMatrix`] when a pivot falls
/// below `n * eps * max|a_ij|`.
pub fn factor<S: Scalar>(a: &Array2<S>) -> Result<Lu<S>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    let scale = a.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
    let pivot_tol = S::from_usize(n.max(1)).unwrap() * S::epsilon() * scale;

    for k in 0..n {
        let mut p = k;
        let mut best = lu[[k, k]].abs();
        for i in k + 1..n {
            let cand = lu[[i, k]].abs();
            if cand > best {
                best = cand;
                p = i;
            }
        }
        if best <= pivot_tol {
            return Err(Error::SingularMatrix);
        }
        if p != k {
            perm.swap(k, p);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[p, j]];
                lu[[p, j]] = tmp;
            }
        }
        let pivot = lu[[k, k]];
        for i in k + 1..n {
            let factor = lu[[i, k]] / pivot;
            lu[[i, k]] = factor;
            for j in k + 1..n {
                let sub = factor * lu[[k, j]];
                lu[[i, j]] = lu[[i, j]] - sub;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl<S: Scalar> Lu<S> {
    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: ArrayView1<S>) -> Array1<S> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length must match matrix dimension");
        let mut x = Array1::zeros(n);
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        // forward substitution (L has unit diagonal)
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_columns(&self, b: &Array2<S>) -> Array2<S> {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "rhs rows must match matrix dimension");
        let mut out = Array2::zeros((n, b.ncols()));
        for j in 0..b.ncols() {
            let col = self.solve(b.column(j));
            out.column_mut(j).assign(&col);
        }
        out
    }
}

/// Infinity norm (maximum absolute row sum).
pub fn inf_norm<S: Scalar>(a: &Array2<S>) -> S {
    a.rows()
        .into_iter()
        .map(|row| row.iter().fold(S::zero(), |acc, &x| acc + x.abs()))
        .fold(S::zero(), |m, s| m.max(s))
}

/// Maximum absolute entry of a vector.
pub fn max_abs<S: Scalar>(v: ArrayView1<S>) -> S {
    v.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn solves_a_small_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let lu = factor(&a).unwrap();
        let x = lu.solve(array![5.0, 10.0].view());
        assert_relative_eq!(x[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 3.0, max_relative = 1e-14);
    }

    #[test]
    fn pivots_through_a_zero_leading_entry() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let lu = factor(&a).unwrap();
        let x = lu.solve(array![2.0, 3.0].view());
        assert_relative_eq!(x[0], 3.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_singular_input() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert_eq!(factor(&a).unwrap_err(), Error::SingularMatrix);
    }

    #[test]
    fn randomized_residuals_are_tiny() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..6);
            let a = Array2::from_shape_fn((n, n), |_| rng.random_range(-2.0..2.0f64));
            let b = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0f64));
            let lu = match factor(&a) {
                Ok(lu) => lu,
                Err(_) => continue, // unlucky singular draw
            };
            let _ = lu.dim();
            let x = lu.solve(b.view());
            let r = &a.dot(&x) - &b;
            assert!(max_abs(r.view()) < 1e-10);
        }
    }
}
