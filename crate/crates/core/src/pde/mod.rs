//! Conservative, positivity-preserving solvers for the heat, Fokker-Planck
//! and fast-diffusion equations, written as Wasserstein gradient flows:
//!
//! * heat: `d_t mu = Lap mu`
//! * Fokker-Planck: `d_t mu = Lap mu + div(x mu)`
//! * fast diffusion in `R^n`, `n > 2`:
//!   `d_t mu = (n-1)/n div[mu grad(-mu^(-1/n) + |x|^2/2)]`
//!
//! All three use a vertex-centred finite-volume discretisation: the control
//! volume of node `i` is its trapezoid weight, faces sit halfway between
//! nodes, and the boundary faces carry no flux. The quadrature mass is
//! therefore conserved by every step up to the linear-solver accuracy.

mod diagnostics;
mod schemes;

pub use diagnostics::{
    de_bruijn_pde_check, dissipation_report, dissipation_report_with, fit_decay_rate, lp_monotonicity, DeBruijnReport,
    DissipationReport, DissipationRow, ReportOptions,
};

use crate::error::{Error, Result};
use crate::grid::{Geometry, Grid, GridDensity};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Heat,
    FokkerPlanck,
    FastDiffusion { n: usize },
}

impl FlowKind {
    pub fn name(&self) -> String {
        match self {
            FlowKind::Heat => "heat".into(),
            FlowKind::FokkerPlanck => "fokker_planck".into(),
            FlowKind::FastDiffusion { n } => format!("fast_diffusion({n})"),
        }
    }
}

/// Configuration of one PDE run.
#[derive(Debug, Clone)]
pub struct FlowSpec<T> {
    pub kind: FlowKind,
    pub grid: Grid<T>,
    pub dt: T,
    pub t_end: T,
    /// Store every k-th step (the initial and final states are always
    /// stored).
    pub snapshot_every: usize,
    /// Relative residual tolerance of the fast-diffusion Newton solve.
    pub newton_tol: T,
    pub max_newton_iter: usize,
}

impl<T: Real> FlowSpec<T> {
    pub fn new(kind: FlowKind, grid: Grid<T>, dt: T, t_end: T) -> Result<Self> {
        let spec = Self {
            kind,
            grid,
            dt,
            t_end,
            snapshot_every: 1,
            newton_tol: T::lit(1e-13),
            max_newton_iter: 50,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("time step must be positive, got {}", self.dt),
            });
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                reason: format!("horizon must be at least dt, got {}", self.t_end),
            });
        }
        if let FlowKind::FastDiffusion { n } = self.kind {
            if n <= 2 {
                return Err(Error::InvalidParameter {
                    name: "n",
                    reason: format!("fast diffusion needs n > 2, got {n}"),
                });
            }
            if self.grid.geometry() != Geometry::Radial || self.grid.dim() != n {
                return Err(Error::UnsupportedGeometry(format!(
                    "fast diffusion in R^{n} runs on a radial grid of dimension {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(0).max(1)
    }
}

/// Per-run bookkeeping of the solver.
#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub steps: usize,
    /// Largest `|mass_k+1 - mass_k|` over single steps.
    pub max_step_mass_drift: f64,
    pub min_value: f64,
    pub max_newton_iterations: usize,
}

/// Integrates the flow from `mu0`; snapshots at the configured cadence.
pub fn solve<T: Real>(spec: &FlowSpec<T>, mu0: &GridDensity<T>) -> Result<Trajectory<T, GridDensity<T>>> {
    solve_with_stats(spec, mu0).map(|(t, _)| t)
}

pub fn solve_with_stats<T: Real>(
    spec: &FlowSpec<T>,
    mu0: &GridDensity<T>,
) -> Result<(Trajectory<T, GridDensity<T>>, SolveStats)> {
    spec.validate()?;
    spec.grid.ensure_same(mu0.grid())?;
    crate::functionals::ensure_positive(mu0)?;
    let grid = mu0.grid().clone();
    let steps = spec.steps();
    let mut stepper = schemes::Stepper::new(spec, &grid)?;
    let mut traj = Trajectory::new(mu0.clone(), format!("{}-implicit", spec.kind.name()), spec.dt);
    let mut stats = SolveStats {
        min_value: mu0.min_value().to_f64_lossy(),
        ..Default::default()
    };
    let mut current = mu0.values().to_vec();
    let mut mass = mu0.mass();
    for k in 1..=steps {
        let (next, iters) = stepper.step(&current)?;
        let state = GridDensity::from_values(grid.clone(), next)?;
        let drift = (state.mass() - mass).abs().to_f64_lossy();
        stats.max_step_mass_drift = stats.max_step_mass_drift.max(drift);
        stats.min_value = stats.min_value.min(state.min_value().to_f64_lossy());
        stats.max_newton_iterations = stats.max_newton_iterations.max(iters);
        mass = state.mass();
        if !(state.min_value() > T::zero()) {
            return Err(Error::NoConvergence(format!(
                "positivity lost at step {k} (min value {})",
                state.min_value()
            )));
        }
        current = state.values().to_vec();
        if k % spec.snapshot_every == 0 || k == steps {
            traj.push(spec.dt * T::from_usize_lossy(k), state);
        }
    }
    stats.steps = steps;
    Ok((traj, stats))
}

/// Stationary state `(C + |x|^2/2)^(-n)` of the fast-diffusion flow on a
/// truncated ball.
#[derive(Debug, Clone)]
pub struct StationaryState<T> {
    pub density: GridDensity<T>,
    /// Normalisation constant found by bisection.
    pub c: T,
    /// Mass the untruncated profile with this `C` carries outside the ball.
    pub tail_mass: T,
}

/// `mu_inf = (C + r^2/2)^(-n)` with `C` chosen by bisection so that the
/// quadrature mass on `grid` is one.
pub fn stationary_fd<T: Real>(n: usize, grid: &Grid<T>) -> Result<StationaryState<T>> {
    if grid.geometry() != Geometry::Radial && n > 1 {
        return Err(Error::UnsupportedGeometry(
            "stationary fast-diffusion profile needs a radial grid".into(),
        ));
    }
    if grid.dim() != n {
        return Err(Error::UnsupportedGeometry(format!(
            "grid dimension {} differs from n = {n}",
            grid.dim()
        )));
    }
    let nf = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let profile = |c: T| -> Vec<T> { grid.map(|r| (c + half * r * r).powf(-nf)) };
    let mass = |c: T| -> T {
        grid.weights()
            .iter()
            .zip(grid.nodes())
            .filter(|(&w, _)| w > T::zero())
            .map(|(&w, &r)| w * (c + half * r * r).powf(-nf))
            .sum()
    };
    let one = T::one();
    let mut hi = T::one();
    let mut guard = 0;
    while mass(hi) > one {
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 200 {
            return Err(Error::NoConvergence("bracketing C from above".into()));
        }
    }
    let mut lo = hi * half;
    guard = 0;
    while mass(lo) < one {
        lo = lo * half;
        guard += 1;
        if guard > 400 || lo == T::zero() {
            return Err(Error::TruncationTooSmall(
                "no normalisation constant reaches unit mass on this grid".into(),
            ));
        }
    }
    for _ in 0..300 {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > one {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = (lo + hi) * half;
    let density = GridDensity::from_values(grid.clone(), profile(c))?;
    let tail_mass = radial_tail_mass(n, c, grid.end());
    Ok(StationaryState { density, c, tail_mass })
}

/// Like [`stationary_fd`], but fails when the profile's mass outside the
/// truncation radius exceeds `max_tail`.
pub fn stationary_fd_checked<T: Real>(n: usize, grid: &Grid<T>, max_tail: T) -> Result<StationaryState<T>> {
    let s = stationary_fd(n, grid)?;
    if s.tail_mass > max_tail {
        return Err(Error::TruncationTooSmall(format!(
            "profile mass beyond r = {} is {:e} > {:e}",
            grid.end(),
            s.tail_mass.to_f64_lossy(),
            max_tail.to_f64_lossy()
        )));
    }
    Ok(s)
}

/// `int_R^inf omega_n r^(n-1) (C + r^2/2)^(-n) dr` by Simpson's rule after
/// the substitution `r = R/u`.
fn radial_tail_mass<T: Real>(n: usize, c: T, radius: T) -> T {
    let omega = crate::grid::unit_sphere_area::<T>(n);
    let nf = T::from_usize_lossy(n);
    let half = T::lit(0.5);
    let f = |u: T| -> T {
        if u == T::zero() {
            return T::zero();
        }
        let r = radius / u;
        omega * r.powi(n as i32 - 1) * (c + half * r * r).powf(-nf) * radius / (u * u)
    };
    let m = 2000usize;
    let h = T::one() / T::from_usize_lossy(m);
    let mut s = f(T::zero()) + f(T::one());
    for k in 1..m {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        s = s + w * f(h * T::from_usize_lossy(k));
    }
    s * h / T::lit(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn line(a: f64, b: f64, n: usize) -> Grid<f64> {
        Grid::uniform(a, b, n, 1, Geometry::Line).unwrap()
    }

    fn gauss(s2: f64) -> impl Fn(f64) -> f64 {
        move |x| (-x * x / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
    }

    #[test]
    fn heat_matches_gaussian_kernel() {
        let g = line(-8.0, 8.0, 1025);
        let mu0 = GridDensity::from_fn(&g, gauss(1.0)).unwrap();
        let spec = FlowSpec::new(FlowKind::Heat, g, 1e-3, 0.5)
            .unwrap()
            .with_snapshot_every(100);
        let traj = solve(&spec, &mu0).unwrap();
        let (t, last) = traj.last();
        assert!((t - 0.5).abs() < 1e-12);
        let err = last.l1_distance_to(gauss(2.0));
        assert!(err < 1e-3, "{err}");
        for s in traj.states() {
            assert!((s.mass() - 1.0).abs() < 1e-12);
            assert!(s.min_value() > 0.0);
        }
    }

    #[test]
    fn fokker_planck_keeps_gaussian() {
        let g = line(-8.0, 8.0, 513);
        let gamma = GridDensity::from_fn(&g, gauss(1.0)).unwrap();
        let spec = FlowSpec::new(FlowKind::FokkerPlanck, g, 0.01, 1.0).unwrap();
        let traj = solve(&spec, &gamma).unwrap();
        for s in traj.states() {
            assert!(s.l1_distance(&gamma).unwrap() < 1e-8);
        }
    }

    #[test]
    fn stationary_profile_normalised_and_decreasing() {
        let g = Grid::<f64>::radial_staggered(10.0, 400, 3).unwrap();
        let s = stationary_fd(3, &g).unwrap();
        assert!((s.density.mass() - 1.0).abs() < 1e-10);
        assert!(s.density.values().windows(2).all(|w| w[1] < w[0]));
        assert!(s.tail_mass > 0.0 && s.tail_mass < 0.05);
        assert!(stationary_fd_checked(3, &g, 1e-6).is_err());
        assert!(stationary_fd(3, &line(-1.0, 1.0, 11)).is_err());
    }

    #[test]
    fn tail_mass_matches_complement_of_inner_mass() {
        // closed-form total in n = 3:
        // int_0^inf 4 pi r^2 (C + r^2/2)^-3 dr = pi^2 2^(3/2) / 4 C^(-3/2)
        let c = 2.0f64;
        let radius = 3.0f64;
        let total = PI * PI * 2f64.powf(1.5) / 4.0 * c.powf(-1.5);
        let m = 20000;
        let h = radius / m as f64;
        let f = |r: f64| 4.0 * PI * r * r * (c + r * r / 2.0).powi(-3);
        let mut inner = f(0.0) + f(radius);
        for k in 1..m {
            inner += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        inner *= h / 3.0;
        let t = radial_tail_mass(3, c, radius);
        assert!((t - (total - inner)).abs() < 1e-10 * total, "{t} {}", total - inner);
    }

    #[test]
    fn fast_diffusion_fixed_point() {
        let g = Grid::radial_staggered(15.0, 300, 3).unwrap();
        let s = stationary_fd(3, &g).unwrap();
        let spec = FlowSpec::new(FlowKind::FastDiffusion { n: 3 }, g, 0.01, 0.2).unwrap();
        let (traj, stats) = solve_with_stats(&spec, &s.density).unwrap();
        assert!(traj.last().1.l1_distance(&s.density).unwrap() < 1e-10);
        assert!(stats.max_step_mass_drift < 1e-12);
    }

    #[test]
    fn invalid_specs() {
        let g = line(-1.0, 1.0, 11);
        assert!(matches!(
            FlowSpec::new(FlowKind::Heat, g.clone(), -1.0, 1.0),
            Err(Error::InvalidParameter { name: "dt", .. })
        ));
        assert!(FlowSpec::new(FlowKind::Heat, g.clone(), 0.1, 0.01).is_err());
        assert!(FlowSpec::new(FlowKind::FastDiffusion { n: 3 }, g, 0.1, 1.0).is_err());
        let r = Grid::radial_staggered(5.0, 20, 2).unwrap();
        assert!(FlowSpec::new(FlowKind::FastDiffusion { n: 2 }, r, 0.1, 1.0).is_err());
    }
}
