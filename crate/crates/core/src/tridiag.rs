//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `A x = rhs` for tridiagonal `A` with sub-diagonal `lower`
/// (`lower[i]` multiplies `x[i]` in row `i + 1`), main diagonal `diag` and
/// super-diagonal `upper` (`upper[i]` multiplies `x[i + 1]` in row `i`).
///
/// No pivoting: intended for the diagonally dominant M-matrices produced by
/// the implicit schemes and the convex Newton systems.
pub fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if lower.len() + 1 != n || upper.len() + 1 != n || rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut pivot = diag[0];
    if pivot == T::zero() || !pivot.is_finite() {
        return Err(Error::SingularSystem(0));
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::SingularSystem(i));
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] = d[i] - c[i] * next;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 4] x = [3 5 5] -> x = [1 1 1]
        let x = solve_tridiagonal::<f64>(&[1.0, 1.0], &[2.0, 3.0, 4.0], &[1.0, 1.0], &[3.0, 5.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_dense_residual() {
        let n = 50;
        let lower: Vec<f64> = (0..n - 1).map(|i| -1.0 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n - 1).map(|i| -0.5 + 0.002 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + (i as f64).sin()).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..n {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r += upper[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_pivot() {
        assert_eq!(
            solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err(),
            Error::SingularSystem(0)
        );
        assert!(solve_tridiagonal(&[1.0], &[1.0], &[1.0], &[1.0]).is_err());
    }
}
