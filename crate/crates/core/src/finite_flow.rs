//! Finite-dimensional gradient flows `x' = -grad E(x)` and the Bakry-Emery
//! diagnostics: de Bruijn identity, exponential decay of `|grad E|^2` and of
//! `E - E(beta)`, and the entropy/entropy-production inequality.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// States above this Euclidean norm mean the potential is not coercive.
pub const DIVERGENCE_NORM: f64 = 1e12;

type ScalarFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
type VectorFn<T> = Box<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type MatrixFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>> + Send + Sync>;

/// A potential `E` on `R^n` with its derivatives and a claimed convexity
/// bound `Hess E >= rho Id`.
pub struct PotentialSpec<T> {
    name: String,
    dim: usize,
    energy: ScalarFn<T>,
    gradient: VectorFn<T>,
    hessian: MatrixFn<T>,
    rho: T,
    beta: Option<Vec<T>>,
}

impl<T: Real> fmt::Debug for PotentialSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("rho", &self.rho)
            .field("beta", &self.beta)
            .finish()
    }
}

impl<T: Real> PotentialSpec<T> {
    pub fn new<E, G, H>(name: impl Into<String>, dim: usize, energy: E, gradient: G, hessian: H, rho: T) -> Result<Self>
    where
        E: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        H: Fn(&[T]) -> Vec<Vec<T>> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "dimension must be at least 1".into(),
            });
        }
        check_rho(rho)?;
        Ok(Self {
            name: name.into(),
            dim,
            energy: Box::new(energy),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
            rho,
            beta: None,
        })
    }

    /// Records the known minimizer.
    pub fn with_minimizer(mut self, beta: Vec<T>) -> Result<Self> {
        self.check_point(&beta)?;
        self.beta = Some(beta);
        Ok(self)
    }

    /// Replaces the claimed convexity constant.
    pub fn with_rho(mut self, rho: T) -> Result<Self> {
        check_rho(rho)?;
        self.rho = rho;
        Ok(self)
    }

    /// `E(x) = |x|^2 / 2`: `rho = 1`, `beta = 0`.
    pub fn quadratic(dim: usize) -> Result<Self> {
        let half = T::lit(0.5);
        Self::new(
            "quadratic",
            dim,
            move |x: &[T]| half * x.iter().map(|&v| v * v).sum::<T>(),
            |x: &[T]| x.to_vec(),
            move |x: &[T]| identity(x.len()),
            T::one(),
        )?
        .with_minimizer(vec![T::zero(); dim])
    }

    /// `E(x) = x^2/2 + x^4/4` on the line: `rho = 1`, `beta = 0`.
    pub fn quartic() -> Result<Self> {
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let three = T::lit(3.0);
        Self::new(
            "quartic",
            1,
            move |x: &[T]| {
                let s = x[0] * x[0];
                half * s + quarter * s * s
            },
            |x: &[T]| vec![x[0] + x[0] * x[0] * x[0]],
            move |x: &[T]| vec![vec![T::one() + three * x[0] * x[0]]],
            T::one(),
        )?
        .with_minimizer(vec![T::zero()])
    }

    /// `E(x) = x^T A x / 2` with `A = [[2, 1/2], [1/2, 1]]`; `rho` is the
    /// smallest eigenvalue `(3 - sqrt 2) / 2`.
    pub fn anisotropic_quadratic() -> Result<Self> {
        let a = [[T::lit(2.0), T::lit(0.5)], [T::lit(0.5), T::one()]];
        let half = T::lit(0.5);
        let rho = (T::lit(3.0) - T::lit(2.0).sqrt()) * half;
        Self::new(
            "anisotropic_quadratic",
            2,
            move |x: &[T]| half * (a[0][0] * x[0] * x[0] + (a[0][1] + a[1][0]) * x[0] * x[1] + a[1][1] * x[1] * x[1]),
            move |x: &[T]| vec![a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]],
            move |_: &[T]| vec![a[0].to_vec(), a[1].to_vec()],
            rho,
        )?
        .with_minimizer(vec![T::zero(); 2])
    }

    /// The built-in bank: quadratic in `R^2`, quartic, anisotropic quadratic.
    pub fn builtin_bank() -> Vec<Self> {
        vec![
            Self::quadratic(2).expect("valid"),
            Self::quartic().expect("valid"),
            Self::anisotropic_quadratic().expect("valid"),
        ]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn beta(&self) -> Option<&[T]> {
        self.beta.as_deref()
    }

    pub fn energy(&self, x: &[T]) -> T {
        (self.energy)(x)
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        (self.gradient)(x)
    }

    pub fn hessian(&self, x: &[T]) -> Vec<Vec<T>> {
        (self.hessian)(x)
    }

    pub fn gradient_norm2(&self, x: &[T]) -> T {
        self.gradient(x).iter().map(|&g| g * g).sum()
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Largest relative error between `gradE` and central differences of
    /// `E` over `points`, measured as `|fd - g| / max(1, |g|)`.
    pub fn gradient_consistency(&self, points: &[Vec<T>]) -> Result<T> {
        let mut worst = T::zero();
        for x in points {
            self.check_point(x)?;
            let g = self.gradient(x);
            let gnorm = g.iter().map(|&v| v * v).sum::<T>().sqrt();
            let mut err2 = T::zero();
            let mut y = x.clone();
            for i in 0..self.dim {
                let h = T::lit(1e-5) * T::one().max(x[i].abs());
                y[i] = x[i] + h;
                let ep = self.energy(&y);
                y[i] = x[i] - h;
                let em = self.energy(&y);
                y[i] = x[i];
                let d = (ep - em) / (h + h) - g[i];
                err2 = err2 + d * d;
            }
            worst = worst.max(err2.sqrt() / T::one().max(gnorm));
        }
        Ok(worst)
    }

    /// Smallest Hessian eigenvalue over a lattice of `per_axis^n` points
    /// spanning the bounding box of `traj`.
    pub fn min_hessian_eigenvalue(&self, traj: &Trajectory<T, Vec<T>>, per_axis: usize) -> Result<T> {
        let per_axis = per_axis.max(2);
        let mut lo = vec![T::infinity(); self.dim];
        let mut hi = vec![T::neg_infinity(); self.dim];
        for x in traj.states() {
            self.check_point(x)?;
            for i in 0..self.dim {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let total = per_axis.pow(self.dim as u32);
        let mut worst = T::infinity();
        let mut x = vec![T::zero(); self.dim];
        for idx in 0..total {
            let mut rem = idx;
            for i in 0..self.dim {
                let k = rem % per_axis;
                rem /= per_axis;
                let s = T::from_usize_lossy(k) / T::from_usize_lossy(per_axis - 1);
                x[i] = lo[i] + s * (hi[i] - lo[i]);
            }
            worst = worst.min(min_eigenvalue(&self.hessian(&x))?);
        }
        Ok(worst)
    }
}

fn check_rho<T: Real>(rho: T) -> Result<()> {
    if !(rho > T::zero()) || !rho.is_finite() {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("convexity constant must be positive, got {rho}"),
        });
    }
    Ok(())
}

fn identity<T: Real>(n: usize) -> Vec<Vec<T>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect()
}

fn to_matrix<T: Real>(m: &[Vec<T>]) -> Result<DMatrix<f64>> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter {
            name: "hessian",
            reason: "Hessian must be square".into(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| m[i][j].to_f64_lossy()))
}

/// Smallest eigenvalue of the symmetrised matrix.
pub fn min_eigenvalue<T: Real>(m: &[Vec<T>]) -> Result<T> {
    let a = to_matrix(m)?;
    let sym = (&a + a.transpose()) * 0.5;
    let min = sym
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(T::lit(min))
}

fn axpy<T: Real>(x: &[T], a: T, d: &[T]) -> Vec<T> {
    x.iter().zip(d).map(|(&xi, &di)| xi + a * di).collect()
}

fn norm<T: Real>(x: &[T]) -> T {
    x.iter().map(|&v| v * v).sum::<T>().sqrt()
}

fn rk4_step<T: Real>(p: &PotentialSpec<T>, x: &[T], h: T) -> Vec<T> {
    let half = T::lit(0.5);
    let k1 = p.gradient(x);
    let k2 = p.gradient(&axpy(x, -half * h, &k1));
    let k3 = p.gradient(&axpy(x, -half * h, &k2));
    let k4 = p.gradient(&axpy(x, -h, &k3));
    let sixth = h / T::lit(6.0);
    (0..x.len())
        .map(|i| x[i] - sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
        .collect()
}

/// A computed flow and its final gradient norm.
#[derive(Debug, Clone)]
pub struct FlowRun<T> {
    pub trajectory: Trajectory<T, Vec<T>>,
    pub final_gradient_norm: T,
}

/// Classical fixed-step RK4 for `x' = -grad E(x)` on `[0, t_end]`; every step
/// is recorded. A shorter last step lands exactly on `t_end`.
pub fn integrate_flow<T: Real>(p: &PotentialSpec<T>, x0: &[T], dt: T, t_end: T) -> Result<FlowRun<T>> {
    p.check_point(x0)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("time step must be positive, got {dt}"),
        });
    }
    if !(t_end >= dt) || !t_end.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("horizon must be at least dt, got {t_end}"),
        });
    }
    let steps = (t_end / dt - T::lit(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    let limit = T::lit(DIVERGENCE_NORM);
    let mut traj = Trajectory::new(x0.to_vec(), "rk4", dt);
    let mut x = x0.to_vec();
    for k in 1..=steps {
        let t_prev = T::from_usize_lossy(k - 1) * dt;
        let t = if k == steps { t_end } else { T::from_usize_lossy(k) * dt };
        x = rk4_step(p, &x, t - t_prev);
        let nx = norm(&x);
        if !(nx <= limit) {
            return Err(Error::Diverged {
                t: t.to_f64_lossy(),
                norm: nx.to_f64_lossy(),
            });
        }
        traj.push(t, x.clone());
    }
    let final_gradient_norm = p.gradient_norm2(&x).sqrt();
    Ok(FlowRun {
        trajectory: traj,
        final_gradient_norm,
    })
}

/// Three-point derivative of `f` at interior index `k` on a possibly
/// nonuniform time grid.
fn centred_derivative<T: Real>(t: &[T], f: &[T], k: usize) -> T {
    let h0 = t[k] - t[k - 1];
    let h1 = t[k + 1] - t[k];
    (-h1 / (h0 * (h0 + h1))) * f[k - 1] + ((h1 - h0) / (h0 * h1)) * f[k] + (h0 / (h1 * (h0 + h1))) * f[k + 1]
}

/// `max_t |d/dt E(S_t) + |grad E(S_t)|^2|`, with the time derivative taken
/// by centred differences of `E` along the trajectory.
pub fn de_bruijn_residual<T: Real>(p: &PotentialSpec<T>, traj: &Trajectory<T, Vec<T>>) -> Result<T> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: traj.len(),
        });
    }
    let t = traj.times();
    let e: Vec<T> = traj.states().iter().map(|x| p.energy(x)).collect();
    let mut worst = T::zero();
    for k in 1..traj.len() - 1 {
        let de = centred_derivative(t, &e, k);
        worst = worst.max((de + p.gradient_norm2(&traj.states()[k])).abs());
    }
    Ok(worst)
}

/// Ratio statistics of a decay check against `e^{-2 rho t}` times the initial
/// value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioCheck<T> {
    pub worst_ratio: T,
    pub best_ratio: T,
    /// The initial quantity vanished (start at the minimizer); the check
    /// passes trivially.
    pub degenerate: bool,
}

impl<T: Real> RatioCheck<T> {
    pub fn passed(&self, tol: T) -> bool {
        self.degenerate || self.worst_ratio <= T::one() + tol
    }
}

fn ratio_check<T: Real>(rho: T, times: &[T], values: &[T]) -> RatioCheck<T> {
    let v0 = values[0];
    if !(v0 > T::lit(1e-300)) {
        return RatioCheck {
            worst_ratio: T::zero(),
            best_ratio: T::zero(),
            degenerate: true,
        };
    }
    let two = T::lit(2.0);
    let mut worst = T::neg_infinity();
    let mut best = T::infinity();
    for (&t, &v) in times.iter().zip(values) {
        let r = v / ((-two * rho * t).exp() * v0);
        worst = worst.max(r);
        best = best.min(r);
    }
    RatioCheck {
        worst_ratio: worst,
        best_ratio: best,
        degenerate: false,
    }
}

/// Worst ratio `|grad E(S_t)|^2 / (e^{-2 rho t} |grad E(x0)|^2)`.
pub fn production_decay_check<T: Real>(p: &PotentialSpec<T>, traj: &Trajectory<T, Vec<T>>) -> RatioCheck<T> {
    let values: Vec<T> = traj.states().iter().map(|x| p.gradient_norm2(x)).collect();
    ratio_check(p.rho, traj.times(), &values)
}

/// Worst ratio `(E(S_t) - E(beta)) / (e^{-2 rho t} (E(x0) - E(beta)))`.
pub fn entropy_decay_check<T: Real>(p: &PotentialSpec<T>, traj: &Trajectory<T, Vec<T>>) -> Result<RatioCheck<T>> {
    let beta = match p.beta() {
        Some(b) => b.to_vec(),
        None => locate_minimizer(p, &traj.states()[0])?,
    };
    let e_min = p.energy(&beta);
    let values: Vec<T> = traj.states().iter().map(|x| p.energy(x) - e_min).collect();
    Ok(ratio_check(p.rho, traj.times(), &values))
}

/// Largest one-step increase of `E` along the trajectory (nonpositive when
/// monotone).
pub fn max_energy_increase<T: Real>(p: &PotentialSpec<T>, traj: &Trajectory<T, Vec<T>>) -> T {
    traj.states()
        .windows(2)
        .map(|w| p.energy(&w[1]) - p.energy(&w[0]))
        .fold(T::neg_infinity(), T::max)
}

/// Finds `beta` by running the flow from `x0` to `t = 20 / rho` and applying
/// one Newton step; errors if the gradient there exceeds `1e-10`.
pub fn locate_minimizer<T: Real>(p: &PotentialSpec<T>, x0: &[T]) -> Result<Vec<T>> {
    p.check_point(x0)?;
    let t_end = T::lit(20.0) / p.rho;
    let stiffness = max_abs_eigenvalue(&p.hessian(x0))?.max(p.rho);
    // RK4 stays accurate well inside its stability interval
    let dt = (T::lit(0.1) / stiffness).min(t_end / T::lit(100.0));
    let run = integrate_flow(p, x0, dt, t_end)?;
    let x = run.trajectory.last().1.clone();
    let scale = T::one().max(p.gradient_norm2(x0).sqrt());
    // a rho-convex flow has shrunk the gradient by e^-20 by now
    let before = p.gradient_norm2(&x).sqrt();
    let polished = newton_step(p, &x)?;
    let g = p.gradient_norm2(&polished).sqrt();
    if !(before <= T::lit(1e-6) * scale && g <= T::lit(1e-10) * scale) {
        return Err(Error::NoConvergence(format!(
            "could not locate the minimizer of {}: |grad E| = {g} after the flow; the potential may not be coercive",
            p.name
        )));
    }
    Ok(polished)
}

fn max_abs_eigenvalue<T: Real>(m: &[Vec<T>]) -> Result<T> {
    let a = to_matrix(m)?;
    let sym = (&a + a.transpose()) * 0.5;
    Ok(T::lit(sym.symmetric_eigenvalues().amax()))
}

fn newton_step<T: Real>(p: &PotentialSpec<T>, x: &[T]) -> Result<Vec<T>> {
    let h = to_matrix(&p.hessian(x))?;
    let g = DVector::from_iterator(p.dim, p.gradient(x).iter().map(|v| v.to_f64_lossy()));
    let delta = h
        .lu()
        .solve(&g)
        .ok_or_else(|| Error::NoConvergence("singular Hessian in Newton polish".into()))?;
    Ok(x.iter().zip(delta.iter()).map(|(&xi, &d)| xi - T::lit(d)).collect())
}

/// Both sides of `E(x) - E(beta) <= |grad E(x)|^2 / (2 rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EepCheck<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> EepCheck<T> {
    pub fn passed(&self, tol: T) -> bool {
        self.lhs <= self.rhs + tol
    }
}

pub fn eep_inequality_check<T: Real>(p: &PotentialSpec<T>, x: &[T]) -> Result<EepCheck<T>> {
    p.check_point(x)?;
    let beta = match p.beta() {
        Some(b) => b.to_vec(),
        None => locate_minimizer(p, x)?,
    };
    Ok(EepCheck {
        lhs: p.energy(x) - p.energy(&beta),
        rhs: p.gradient_norm2(x) / (T::lit(2.0) * p.rho),
    })
}

/// Writes `t,x_1..x_n,E,gradnorm2`.
pub fn write_trajectory_csv<T: Real, W: Write>(
    p: &PotentialSpec<T>,
    traj: &Trajectory<T, Vec<T>>,
    mut out: W,
) -> Result<()> {
    let mut header = String::from("t");
    for i in 1..=p.dim {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(out, "{header},E,gradnorm2")?;
    for (&t, x) in traj.iter() {
        let mut line = format!("{:.16e}", t.to_f64_lossy());
        for v in x {
            line.push_str(&format!(",{:.16e}", v.to_f64_lossy()));
        }
        writeln!(
            out,
            "{line},{:.16e},{:.16e}",
            p.energy(x).to_f64_lossy(),
            p.gradient_norm2(x).to_f64_lossy()
        )?;
    }
    Ok(())
}
