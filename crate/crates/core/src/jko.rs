//! Minimizing-movement (JKO) scheme in quantile coordinates.
//!
//! A measure on the line is represented by its quantile values `X_j` at the
//! levels `q_j = (j + 1/2) / M`. In these coordinates
//!
//! ```text
//! Ent(mu)      = -dq sum_j log((X_{j+1} - X_j) / dq)
//! int V dmu    =  dq sum_j V(X_j)
//! W2(mu, nu)^2 =  dq sum_j (X_j - Y_j)^2
//! ```
//!
//! so one proximal step `argmin F(mu) + W2(mu, mu_k)^2 / (2 tau)` is a
//! strictly convex problem in `X` with a tridiagonal Hessian, solved by
//! Newton's method with a feasibility-preserving backtracking line search.

use std::io::Write;

use crate::error::{Error, Result};
use crate::functionals::{FreeEnergyFunctional, FunctionalKind};
use crate::grid::{Geometry, Grid, GridDensity};
use crate::quantile::{cdf_and_quantile, QuantileRep};
use crate::scalar::Real;
use crate::trajectory::Trajectory;
use crate::tridiag::solve_tridiagonal;

/// Smallest quantile resolution accepted.
pub const MIN_JKO_NODES: usize = 64;

/// Floor on quantile increments inside the logarithm.
pub const INCREMENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoConfig<T> {
    /// Time step.
    pub tau: T,
    /// Number of steps; the horizon is `tau * steps`.
    pub steps: usize,
    /// Quantile resolution.
    pub m: usize,
    /// Newton stops once half the Newton decrement drops below this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> JkoConfig<T> {
    pub fn new(tau: T, steps: usize, m: usize) -> Result<Self> {
        let cfg = Self {
            tau,
            steps,
            m,
            tol: T::lit(1e-14),
            max_iter: 100,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("time step must be positive, got {}", self.tau),
            });
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "need at least one step".into(),
            });
        }
        if self.m < MIN_JKO_NODES {
            return Err(Error::InvalidParameter {
                name: "M",
                reason: format!("need at least {MIN_JKO_NODES} quantile nodes, got {}", self.m),
            });
        }
        if !(self.tol > T::zero()) || self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: "inner tolerance and iteration cap must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn horizon(&self) -> T {
        self.tau * T::from_usize_lossy(self.steps)
    }
}

/// External potential of a supported functional, or an error for the
/// others.
fn potential<T: Real>(f: &FreeEnergyFunctional<T>) -> Result<bool> {
    match f.kind() {
        FunctionalKind::BoltzmannEntropy => Ok(false),
        FunctionalKind::FokkerPlanck => Ok(true),
        other => Err(Error::Unsupported(format!(
            "minimizing movement in quantile coordinates for {}",
            other.name()
        ))),
    }
}

/// Free energy of the measure with quantile values `x`.
pub fn quantile_energy<T: Real>(f: &FreeEnergyFunctional<T>, x: &[T]) -> Result<T> {
    let with_v = potential(f)?;
    Ok(energy(with_v, x))
}

fn energy<T: Real>(with_v: bool, x: &[T]) -> T {
    let m = x.len();
    let dq = T::one() / T::from_usize_lossy(m);
    let floor = T::lit(INCREMENT_FLOOR);
    let half = T::lit(0.5);
    let mut e = T::zero();
    for w in x.windows(2) {
        e = e - ((w[1] - w[0]).max(floor) / dq).ln();
    }
    if with_v {
        for &xi in x {
            e = e + half * xi * xi;
        }
    }
    e * dq
}

/// Proximal objective `F(X) + dq sum (X - Y)^2 / (2 tau)`.
fn objective<T: Real>(with_v: bool, tau: T, y: &[T], x: &[T]) -> T {
    let dq = T::one() / T::from_usize_lossy(x.len());
    let half = T::lit(0.5);
    let prox: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    energy(with_v, x) + prox * dq * half / tau
}

/// Euclidean projection onto `{X : X_{j+1} - X_j >= delta}` by
/// pool-adjacent-violators on `X_j - j delta`.
pub fn monotone_repair<T: Real>(x: &[T], delta: T) -> Vec<T> {
    let shifted: Vec<T> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| v - delta * T::from_usize_lossy(j))
        .collect();
    // blocks of (sum, count)
    let mut blocks: Vec<(T, usize)> = Vec::with_capacity(x.len());
    for &v in &shifted {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / T::from_usize_lossy(c0) > s1 / T::from_usize_lossy(c1) {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (s, c) in blocks {
        let mean = s / T::from_usize_lossy(c);
        out.extend(std::iter::repeat_n(mean, c));
    }
    out.iter()
        .enumerate()
        .map(|(j, &v)| v + delta * T::from_usize_lossy(j))
        .collect()
}

struct NewtonOutcome<T> {
    x: Vec<T>,
    iterations: usize,
}

/// Minimizes the proximal objective from the feasible start `x0`.
fn newton<T: Real>(with_v: bool, tau: T, y: &[T], x0: Vec<T>, cfg: &JkoConfig<T>) -> Result<NewtonOutcome<T>> {
    let m = y.len();
    let dq = T::one() / T::from_usize_lossy(m);
    let inv_tau = T::one() / tau;
    let mut x = x0;
    let mut f = objective(with_v, tau, y, &x);
    for it in 0..cfg.max_iter {
        let d: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut g = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut off = vec![T::zero(); m - 1];
        for j in 0..m {
            let mut gj = (x[j] - y[j]) * inv_tau;
            let mut hj = inv_tau;
            if with_v {
                gj = gj + x[j];
                hj = hj + T::one();
            }
            if j + 1 < m {
                gj = gj + T::one() / d[j];
                hj = hj + T::one() / (d[j] * d[j]);
                off[j] = -dq / (d[j] * d[j]);
            }
            if j > 0 {
                gj = gj - T::one() / d[j - 1];
                hj = hj + T::one() / (d[j - 1] * d[j - 1]);
            }
            g[j] = gj * dq;
            diag[j] = hj * dq;
        }
        let neg: Vec<T> = g.iter().map(|&v| -v).collect();
        let step = solve_tridiagonal(&off, &diag, &off, &neg)?;
        let decrement: T = -g.iter().zip(&step).map(|(&a, &b)| a * b).sum::<T>();
        if decrement * T::lit(0.5) <= cfg.tol {
            return Ok(NewtonOutcome { x, iterations: it });
        }
        // largest step keeping every increment positive
        let mut alpha = T::one();
        for j in 0..m - 1 {
            let dd = step[j + 1] - step[j];
            if dd < T::zero() {
                alpha = alpha.min(T::lit(0.99) * d[j] / (-dd));
            }
        }
        let slope = -decrement;
        loop {
            let trial: Vec<T> = x.iter().zip(&step).map(|(&a, &b)| a + alpha * b).collect();
            let ft = objective(with_v, tau, y, &trial);
            if ft <= f + T::lit(1e-4) * alpha * slope {
                if !(ft < f) {
                    // no representable decrease left
                    return Ok(NewtonOutcome { x, iterations: it + 1 });
                }
                x = trial;
                f = ft;
                break;
            }
            alpha = alpha * T::lit(0.5);
            if alpha < T::lit(1e-20) {
                // rounding floor reached: the iterate is already optimal to
                // machine precision
                return Ok(NewtonOutcome { x, iterations: it + 1 });
            }
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            x = monotone_repair(&x, T::lit(INCREMENT_FLOOR));
            f = objective(with_v, tau, y, &x);
        }
    }
    Err(Error::NoConvergence(format!(
        "proximal Newton solve after {} iterations",
        cfg.max_iter
    )))
}

/// Result of one proximal step.
#[derive(Debug, Clone)]
pub struct JkoStep<T> {
    pub quantile: QuantileRep<T>,
    pub energy_before: T,
    pub energy_after: T,
    /// Proximal objective of the stay-put candidate, which equals
    /// `energy_before`.
    pub objective_before: T,
    pub objective_after: T,
    /// `W2(mu_{k+1}, mu_k)`.
    pub w2_step: T,
    pub iterations: usize,
}

/// One proximal step from quantile values `y`.
pub fn jko_step_quantile<T: Real>(
    f: &FreeEnergyFunctional<T>,
    y: &QuantileRep<T>,
    cfg: &JkoConfig<T>,
) -> Result<JkoStep<T>> {
    cfg.validate()?;
    let with_v = potential(f)?;
    let yv = y.values();
    let floor = T::lit(INCREMENT_FLOOR);
    let start = if yv.windows(2).all(|w| w[1] - w[0] >= floor) {
        yv.to_vec()
    } else {
        // any feasible point works as a start; a tenth of the mean spacing
        // keeps the first Newton system well conditioned
        let m = T::from_usize_lossy(yv.len());
        let spread = (yv[yv.len() - 1] - yv[0]).max(T::one());
        monotone_repair(yv, T::lit(0.1) * spread / m)
    };
    let objective_before = objective(with_v, cfg.tau, yv, yv);
    let out = newton(with_v, cfg.tau, yv, start, cfg)?;
    let objective_after = objective(with_v, cfg.tau, yv, &out.x);
    let slack = T::lit(1e-12) * T::one().max(objective_before.abs());
    if objective_after > objective_before + slack {
        return Err(Error::ObjectiveIncrease {
            before: objective_before.to_f64_lossy(),
            after: objective_after.to_f64_lossy(),
        });
    }
    let energy_after = energy(with_v, &out.x);
    let dq = T::one() / T::from_usize_lossy(yv.len());
    let w2 = (out.x.iter().zip(yv).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() * dq).sqrt();
    Ok(JkoStep {
        quantile: QuantileRep::new(out.x)?,
        energy_before: energy(with_v, yv),
        energy_after,
        objective_before,
        objective_after,
        w2_step: w2,
        iterations: out.iterations,
    })
}

fn require_line<T: Real>(grid: &Grid<T>) -> Result<()> {
    if grid.geometry() != Geometry::Line {
        return Err(Error::UnsupportedGeometry(
            "minimizing movement runs on line grids".into(),
        ));
    }
    Ok(())
}

/// One proximal step from a grid density; the result is converted back to
/// the same grid.
pub fn jko_step<T: Real>(
    f: &FreeEnergyFunctional<T>,
    mu: &GridDensity<T>,
    cfg: &JkoConfig<T>,
) -> Result<GridDensity<T>> {
    require_line(mu.grid())?;
    let y = cdf_and_quantile(mu, cfg.m)?;
    jko_step_quantile(f, &y, cfg)?.quantile.to_density(mu.grid())
}

/// Minimizer of the discrete free energy itself (no proximal term); only
/// the Fokker-Planck energy has one. Computed as the limit of proximal
/// steps of growing size, started from `start`.
pub fn discrete_minimizer<T: Real>(f: &FreeEnergyFunctional<T>, start: &QuantileRep<T>) -> Result<QuantileRep<T>> {
    if f.kind() != FunctionalKind::FokkerPlanck {
        return Err(Error::Unsupported(format!("{} has no minimizer on the line", f.name())));
    }
    let mut cfg = JkoConfig::new(T::one(), 1, start.len().max(MIN_JKO_NODES))?;
    cfg.tol = T::lit(1e-20);
    let mut x = start.clone();
    for _ in 0..200 {
        let step = jko_step_quantile(f, &x, &cfg)?;
        let moved = step.w2_step;
        x = step.quantile;
        cfg.tau = (cfg.tau * T::lit(10.0)).min(T::lit(1e12));
        if moved < T::lit(1e-15) {
            break;
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JkoLogRow<T> {
    pub k: usize,
    /// Free energy after step `k` (row 0 is the initial state).
    pub energy: T,
    pub w2_step: T,
    pub inner_iters: usize,
}

#[derive(Debug, Clone)]
pub struct JkoRun<T> {
    /// Densities at `t = k tau` on the grid of the initial density.
    pub trajectory: Trajectory<T, GridDensity<T>>,
    pub quantiles: Vec<QuantileRep<T>>,
    pub log: Vec<JkoLogRow<T>>,
}

impl<T: Real> JkoRun<T> {
    /// Largest one-step increase of the free energy (nonpositive when
    /// monotone).
    pub fn max_energy_increase(&self) -> T {
        self.log
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(T::neg_infinity(), T::max)
    }

    /// Writes `k,F,W2_step,inner_iters`.
    pub fn write_log_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,F,W2_step,inner_iters")?;
        for r in &self.log {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                r.k,
                r.energy.to_f64_lossy(),
                r.w2_step.to_f64_lossy(),
                r.inner_iters
            )?;
        }
        Ok(())
    }
}

/// `cfg.steps` proximal steps from `mu0`. The iteration runs in quantile
/// coordinates; each state is converted to the grid of `mu0` for output.
pub fn jko_trajectory<T: Real>(
    f: &FreeEnergyFunctional<T>,
    mu0: &GridDensity<T>,
    cfg: &JkoConfig<T>,
) -> Result<JkoRun<T>> {
    require_line(mu0.grid())?;
    let x0 = cdf_and_quantile(mu0, cfg.m)?;
    let mut run = jko_trajectory_from(f, x0, mu0.grid(), cfg)?;
    // the first state is the input itself rather than its quantile image
    let mut states = run.trajectory.states().to_vec();
    states[0] = mu0.clone();
    run.trajectory = Trajectory::from_parts(run.trajectory.times().to_vec(), states, "jko", cfg.tau)?;
    Ok(run)
}

/// As [`jko_trajectory`], starting from quantile values.
pub fn jko_trajectory_from<T: Real>(
    f: &FreeEnergyFunctional<T>,
    x0: QuantileRep<T>,
    grid: &Grid<T>,
    cfg: &JkoConfig<T>,
) -> Result<JkoRun<T>> {
    require_line(grid)?;
    cfg.validate()?;
    let with_v = potential(f)?;
    let mut trajectory = Trajectory::new(x0.to_density(grid)?, "jko", cfg.tau);
    let mut log = vec![JkoLogRow {
        k: 0,
        energy: energy(with_v, x0.values()),
        w2_step: T::zero(),
        inner_iters: 0,
    }];
    let mut quantiles = vec![x0];
    for k in 1..=cfg.steps {
        let step = jko_step_quantile(f, quantiles.last().unwrap(), cfg)?;
        trajectory.push(cfg.tau * T::from_usize_lossy(k), step.quantile.to_density(grid)?);
        log.push(JkoLogRow {
            k,
            energy: step.energy_after,
            w2_step: step.w2_step,
            inner_iters: step.iterations,
        });
        quantiles.push(step.quantile);
    }
    Ok(JkoRun {
        trajectory,
        quantiles,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repair_projects_onto_increasing_sequences() {
        let x = [0.0, 2.0, 1.0, 3.0];
        let r = monotone_repair(&x, 0.0);
        assert_eq!(r, vec![0.0, 1.5, 1.5, 3.0]);
        let r = monotone_repair(&[1.0, 1.0, 1.0], 0.5);
        assert_eq!(r, vec![0.5, 1.0, 1.5]);
        let sorted = [0.0, 1.0, 4.0];
        assert_eq!(monotone_repair(&sorted, 0.0), sorted.to_vec());
    }

    #[test]
    fn config_validation_names_fields() {
        assert!(matches!(
            JkoConfig::<f64>::new(0.0, 10, 100),
            Err(Error::InvalidParameter { name: "tau", .. })
        ));
        assert!(matches!(
            JkoConfig::<f64>::new(0.1, 10, 32),
            Err(Error::InvalidParameter { name: "M", .. })
        ));
        assert!((JkoConfig::<f64>::new(0.02, 50, 64).unwrap().horizon() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_functionals_are_rejected() {
        let cfg = JkoConfig::<f64>::new(0.1, 1, 64).unwrap();
        let y = QuantileRep::from_inverse_cdf(64, |q: f64| q).unwrap();
        let fd = FreeEnergyFunctional::fast_diffusion(3).unwrap();
        assert!(jko_step_quantile(&fd, &y, &cfg).is_err());
    }

    #[test]
    fn ties_in_the_input_are_repaired() {
        let cfg = JkoConfig::<f64>::new(0.05, 1, 64).unwrap();
        let mut v: Vec<f64> = (0..64).map(|j| (j as f64 - 31.5) / 20.0).collect();
        v[10] = v[11];
        let y = QuantileRep::new(v).unwrap();
        let step = jko_step_quantile(&FreeEnergyFunctional::boltzmann(), &y, &cfg).unwrap();
        assert!(step.quantile.values().windows(2).all(|w| w[1] > w[0]));
    }
}
