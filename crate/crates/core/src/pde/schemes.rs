//! One implicit time step of each flow.

use super::{FlowKind, FlowSpec};
use crate::error::{Error, Result};
use crate::grid::{unit_sphere_area, Geometry, Grid};
use crate::scalar::Real;
use crate::tridiag::solve_tridiagonal;

/// Bernoulli function `z / (e^z - 1)`.
pub(crate) fn bernoulli<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-8) {
        T::one() - z * T::lit(0.5)
    } else {
        z / z.exp_m1()
    }
}

/// Face areas divided by the spacing, one per interior face.
fn face_conductance<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let nodes = grid.nodes();
    let h = grid.spacing();
    let half = T::lit(0.5);
    let omega = unit_sphere_area::<T>(grid.dim());
    nodes
        .windows(2)
        .map(|w| match grid.geometry() {
            Geometry::Line => T::one() / h,
            Geometry::Radial => omega * ((w[0] + w[1]) * half).powi(grid.dim() as i32 - 1) / h,
        })
        .collect()
}

pub(crate) enum Stepper<T> {
    /// Heat / Fokker-Planck: constant tridiagonal system.
    Linear {
        lower: Vec<T>,
        diag: Vec<T>,
        upper: Vec<T>,
        weights: Vec<T>,
    },
    FastDiffusion {
        n: usize,
        dt: T,
        weights: Vec<T>,
        conductance: Vec<T>,
        half_r2: Vec<T>,
        tol: T,
        max_iter: usize,
    },
}

impl<T: Real> Stepper<T> {
    pub fn new(spec: &FlowSpec<T>, grid: &Grid<T>) -> Result<Self> {
        let weights = grid.weights().to_vec();
        if weights.iter().any(|&w| !(w > T::zero())) {
            return Err(Error::InvalidGrid(
                "every node needs a positive control volume; use a staggered radial grid".into(),
            ));
        }
        let cond = face_conductance(grid);
        let half = T::lit(0.5);
        match spec.kind {
            FlowKind::Heat | FlowKind::FokkerPlanck => {
                let pot: Vec<T> = match spec.kind {
                    FlowKind::Heat => vec![T::zero(); grid.len()],
                    _ => grid.map(|x| half * x * x),
                };
                let n = grid.len();
                let dt = spec.dt;
                let mut diag = weights.clone();
                let mut lower = vec![T::zero(); n - 1];
                let mut upper = vec![T::zero(); n - 1];
                // flux J_{i+1/2} = -g [B(-dV) mu_{i+1} - B(dV) mu_i]
                for i in 0..n - 1 {
                    let dv = pot[i + 1] - pot[i];
                    let bp = bernoulli(dv);
                    let bm = bernoulli(-dv);
                    let g = cond[i] * dt;
                    diag[i] = diag[i] + g * bp;
                    upper[i] = -g * bm;
                    diag[i + 1] = diag[i + 1] + g * bm;
                    lower[i] = -g * bp;
                }
                Ok(Stepper::Linear {
                    lower,
                    diag,
                    upper,
                    weights,
                })
            }
            FlowKind::FastDiffusion { n } => Ok(Stepper::FastDiffusion {
                n,
                dt: spec.dt,
                weights,
                conductance: cond,
                half_r2: grid.map(|r| half * r * r),
                tol: spec.newton_tol,
                max_iter: spec.max_newton_iter,
            }),
        }
    }

    /// Advances one step; returns the new values and the number of
    /// nonlinear iterations used.
    pub fn step(&mut self, old: &[T]) -> Result<(Vec<T>, usize)> {
        match self {
            Stepper::Linear {
                lower,
                diag,
                upper,
                weights,
            } => {
                let rhs: Vec<T> = weights.iter().zip(old).map(|(&w, &m)| w * m).collect();
                Ok((solve_tridiagonal(lower, diag, upper, &rhs)?, 1))
            }
            Stepper::FastDiffusion {
                n,
                dt,
                weights,
                conductance,
                half_r2,
                tol,
                max_iter,
            } => fast_diffusion_step(*n, *dt, weights, conductance, half_r2, *tol, *max_iter, old),
        }
    }
}

/// Semi-implicit step with lagged mobility and implicit chemical potential
/// `xi = -mu^(-1/n) + r^2/2`, solved by damped Newton on a tridiagonal
/// Jacobian.
#[allow(clippy::too_many_arguments)]
fn fast_diffusion_step<T: Real>(
    n: usize,
    dt: T,
    weights: &[T],
    conductance: &[T],
    half_r2: &[T],
    tol: T,
    max_iter: usize,
    old: &[T],
) -> Result<(Vec<T>, usize)> {
    let len = old.len();
    let nf = T::from_usize_lossy(n);
    let c = (nf - T::one()) / nf;
    let half = T::lit(0.5);
    let inv_n = T::one() / nf;
    // K_{i+1/2} dt with lagged face mobility
    let k: Vec<T> = (0..len - 1)
        .map(|i| dt * c * conductance[i] * half * (old[i] + old[i + 1]))
        .collect();
    let scale = weights.iter().zip(old).fold(T::zero(), |m, (&w, &v)| m.max(w * v));
    let mut mu = old.to_vec();
    let mut xi = vec![T::zero(); len];
    let mut res = vec![T::zero(); len];
    for iter in 0..=max_iter {
        for i in 0..len {
            xi[i] = -mu[i].powf(-inv_n) + half_r2[i];
        }
        for i in 0..len {
            let mut r = weights[i] * (mu[i] - old[i]);
            if i + 1 < len {
                r = r - k[i] * (xi[i + 1] - xi[i]);
            }
            if i > 0 {
                r = r + k[i - 1] * (xi[i] - xi[i - 1]);
            }
            res[i] = r;
        }
        let rnorm = res.iter().fold(T::zero(), |m, &r| m.max(r.abs()));
        if rnorm <= tol * scale {
            return Ok((mu, iter));
        }
        if iter == max_iter {
            break;
        }
        let s: Vec<T> = mu.iter().map(|&m| inv_n * m.powf(-inv_n - T::one())).collect();
        let mut diag = weights.to_vec();
        let mut lower = vec![T::zero(); len - 1];
        let mut upper = vec![T::zero(); len - 1];
        for i in 0..len - 1 {
            diag[i] = diag[i] + k[i] * s[i];
            diag[i + 1] = diag[i + 1] + k[i] * s[i + 1];
            upper[i] = -k[i] * s[i + 1];
            lower[i] = -k[i] * s[i];
        }
        let neg: Vec<T> = res.iter().map(|&r| -r).collect();
        let delta = solve_tridiagonal(&lower, &diag, &upper, &neg)?;
        // keep every value above a tenth of its current level
        let mut alpha = T::one();
        for (&m, &d) in mu.iter().zip(&delta) {
            if d < T::zero() {
                let limit = T::lit(0.9) * m / (-d);
                if limit < alpha {
                    alpha = limit;
                }
            }
        }
        for (m, d) in mu.iter_mut().zip(&delta) {
            *m = *m + alpha * *d;
        }
    }
    Err(Error::NoConvergence(format!(
        "fast-diffusion Newton solve after {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0.0f64), 1.0);
        assert!((bernoulli(1.0f64) - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-15);
        // B(-z) = B(z) e^z
        for z in [1e-9, 1e-3, 0.5, 4.0] {
            assert!((bernoulli(-z) - bernoulli(z) * f64::exp(z)).abs() < 1e-12);
        }
    }
}
