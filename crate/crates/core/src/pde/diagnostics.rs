//! Entropy-dissipation diagnostics along computed PDE trajectories.

use crate::error::{Error, Result};
use crate::functionals::FreeEnergyFunctional;
use crate::grid::GridDensity;
use crate::scalar::Real;
use crate::trajectory::Trajectory;

/// Centred time derivative of the entropy against minus the Fisher
/// information at each interior snapshot.
#[derive(Debug, Clone)]
pub struct DeBruijnReport<T> {
    /// `(t, d/dt Ent, -Fisher)`.
    pub rows: Vec<(T, T, T)>,
    pub max_residual: T,
}

/// Checks `d/dt Ent(mu_t) = -int |grad mu_t|^2 / mu_t` on snapshots with
/// `t_min <= t <= t_max`.
pub fn de_bruijn_pde_check<T: Real>(
    traj: &Trajectory<T, GridDensity<T>>,
    t_min: T,
    t_max: T,
) -> Result<DeBruijnReport<T>> {
    if traj.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: traj.len(),
        });
    }
    let ent = FreeEnergyFunctional::boltzmann();
    let t = traj.times();
    let s = traj.states();
    let values: Vec<T> = s.iter().map(|m| ent.value(m)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut max_residual = T::zero();
    for k in 1..traj.len() - 1 {
        if t[k] < t_min || t[k] > t_max {
            continue;
        }
        let lhs = (values[k + 1] - values[k - 1]) / (t[k + 1] - t[k - 1]);
        let rhs = -ent.production(&s[k])?;
        max_residual = max_residual.max((lhs - rhs).abs());
        rows.push((t[k], lhs, rhs));
    }
    Ok(DeBruijnReport { rows, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationRow<T> {
    pub t: T,
    pub value: T,
    pub production: T,
    /// `exp(-2 rho t) * production(0)`, or its implicit-Euler counterpart
    /// `(1 + rho dt)^(-2 t / dt) * production(0)` for trajectories from the
    /// implicit solvers.
    pub bound: T,
}

/// Tolerances of [`dissipation_report`].
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions<T> {
    /// Relative slack on `production <= bound`.
    pub bound_tol: T,
    /// Fits use rows whose quantity exceeds `fit_floor` times its initial
    /// value.
    pub fit_floor: T,
    /// Allowed relative shortfall of the fitted production rate below `2 rho`.
    pub rate_slack: T,
    /// Allowed per-step increase of the functional.
    pub monotone_tol: T,
}

impl<T: Real> Default for ReportOptions<T> {
    fn default() -> Self {
        Self {
            bound_tol: T::lit(1e-3),
            fit_floor: T::lit(1e-6),
            rate_slack: T::lit(0.05),
            monotone_tol: T::lit(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DissipationReport<T> {
    pub rows: Vec<DissipationRow<T>>,
    pub rho: T,
    /// `F(minimizer)` when the functional carries one.
    pub reference_value: Option<T>,
    /// Fitted exponential rate of `F(mu_t) - F(minimizer)`.
    pub value_rate: Option<T>,
    /// Fitted exponential rate of the production.
    pub production_rate: Option<T>,
    /// Largest `production / bound`.
    pub worst_bound_ratio: T,
    pub max_value_increase: T,
    pub production_within_bound: bool,
    pub value_monotone: bool,
    pub rate_ok: bool,
    /// Initial production was zero (start at the minimizer).
    pub degenerate: bool,
}

impl<T: Real> DissipationReport<T> {
    pub fn passed(&self) -> bool {
        self.production_within_bound && self.value_monotone && self.rate_ok
    }

    /// Writes `t,value,production,bound`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value,production,bound")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t.to_f64_lossy(),
                r.value.to_f64_lossy(),
                r.production.to_f64_lossy(),
                r.bound.to_f64_lossy()
            )?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log y` against `t` over rows with
/// `y > floor * y[0]`; returns the decay rate `-slope`.
pub fn fit_decay_rate<T: Real>(times: &[T], values: &[T], floor: T) -> Option<T> {
    let first = *values.first()?;
    if !(first > T::zero()) {
        return None;
    }
    let cut = first * floor;
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter(|(_, &y)| y > cut && y > T::zero())
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == T::zero() {
        return None;
    }
    Some(-sxy / sxx)
}

/// Tabulates value, production and the Bakry-Emery bound along `traj` and
/// fits exponential decay rates.
pub fn dissipation_report<T: Real>(
    traj: &Trajectory<T, GridDensity<T>>,
    functional: &FreeEnergyFunctional<T>,
) -> Result<DissipationReport<T>> {
    dissipation_report_with(traj, functional, &ReportOptions::default())
}

pub fn dissipation_report_with<T: Real>(
    traj: &Trajectory<T, GridDensity<T>>,
    functional: &FreeEnergyFunctional<T>,
    opts: &ReportOptions<T>,
) -> Result<DissipationReport<T>> {
    let rho = functional
        .rho()
        .ok_or_else(|| Error::Unsupported(format!("{} has no convexity constant", functional.name())))?;
    let reference_value = functional.minimizer().map(|m| functional.value(m)).transpose()?;
    // One implicit Euler step contracts the slope by 1/(1 + rho dt), which
    // trails exp(-rho dt) by O(dt^2) per step.
    let implicit_dt = (traj.solver.ends_with("-implicit") && traj.step > T::zero()).then_some(traj.step);
    let mut rows = Vec::with_capacity(traj.len());
    let mut p0 = T::zero();
    for (k, (&t, mu)) in traj.iter().enumerate() {
        let value = functional.value(mu)?;
        let production = functional.production(mu)?;
        if k == 0 {
            p0 = production;
        }
        let decay = match implicit_dt {
            Some(dt) => (-T::lit(2.0) * (t / dt) * (T::one() + rho * dt).ln()).exp(),
            None => (-T::lit(2.0) * rho * t).exp(),
        };
        let bound = decay * p0;
        rows.push(DissipationRow {
            t,
            value,
            production,
            bound,
        });
    }
    let degenerate = !(p0 > T::lit(1e-20));
    let times: Vec<T> = rows.iter().map(|r| r.t).collect();
    let mut worst_bound_ratio = T::zero();
    let mut production_within_bound = true;
    if !degenerate {
        for r in &rows {
            let ratio = r.production / r.bound;
            worst_bound_ratio = worst_bound_ratio.max(ratio);
            if r.production > r.bound * (T::one() + opts.bound_tol) {
                production_within_bound = false;
            }
        }
    }
    let max_value_increase = rows
        .windows(2)
        .map(|w| w[1].value - w[0].value)
        .fold(T::neg_infinity(), T::max)
        .max(T::zero());
    let value_monotone = max_value_increase <= opts.monotone_tol;
    let (value_rate, production_rate) = if degenerate {
        (None, None)
    } else {
        let prods: Vec<T> = rows.iter().map(|r| r.production).collect();
        let value_rate = reference_value.and_then(|v0| {
            let gaps: Vec<T> = rows.iter().map(|r| r.value - v0).collect();
            fit_decay_rate(&times, &gaps, opts.fit_floor)
        });
        (value_rate, fit_decay_rate(&times, &prods, opts.fit_floor))
    };
    let target = T::lit(2.0) * rho * (T::one() - opts.rate_slack);
    let rate_ok = degenerate || production_rate.map(|r| r >= target).unwrap_or(false);
    Ok(DissipationReport {
        rows,
        rho,
        reference_value,
        value_rate,
        production_rate,
        worst_bound_ratio,
        max_value_increase,
        production_within_bound,
        value_monotone,
        rate_ok,
        degenerate,
    })
}

/// Largest one-step increase of `int mu^p` along the trajectory (zero or
/// negative when the functional is nonincreasing).
pub fn lp_monotonicity<T: Real>(traj: &Trajectory<T, GridDensity<T>>, p: T) -> Result<T> {
    let lp = FreeEnergyFunctional::lp_norm(p)?;
    let vals: Vec<T> = traj.states().iter().map(|m| lp.value(m)).collect::<Result<_>>()?;
    Ok(vals.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max))
}
