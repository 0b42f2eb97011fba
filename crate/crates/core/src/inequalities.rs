//! Numerical checkers for functional inequalities: Gaussian log-Sobolev,
//! sharp Sobolev, entropy/entropy-production and the generalized
//! relative-entropy inequality `int H(u) - H(v) - (u - v) Psi(v) <=
//! 1/(2C) int |grad(Psi(v) - Psi(u))|^2 u` with its two hypotheses.
//!
//! Every checker returns an [`InequalityCheck`]; a case passes when
//! `lhs <= rhs + 1e-6 max(1, |rhs|)`.

use std::io::Write;

use crate::bank::{self, TestFunction};
use crate::error::{Error, Result};
use crate::functionals::FreeEnergyFunctional;
use crate::grid::{gradient_fd, normalize, second_derivative_fd, unit_sphere_area, Geometry, Grid, GridDensity};
use crate::pde::stationary_fd;
use crate::scalar::Real;

/// Relative slack of a pass.
pub const CHECK_RTOL: f64 = 1e-6;

/// Absolute slack of the two hypotheses of [`ZugmeyerProblem`].
pub const HYPOTHESIS_TOL: f64 = 1e-10;

/// Largest `|f(R)| / max|f|` accepted by [`TailPolicy::Reject`].
pub const SOBOLEV_BOUNDARY_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> InequalityCheck<T> {
    pub fn margin(&self) -> T {
        self.rhs - self.lhs
    }

    pub fn tolerance(&self) -> T {
        T::lit(CHECK_RTOL) * T::one().max(self.rhs.abs())
    }

    pub fn passed(&self) -> bool {
        self.lhs <= self.rhs + self.tolerance()
    }

    /// `lhs / rhs`; 1 on equality cases.
    pub fn ratio(&self) -> T {
        self.lhs / self.rhs
    }

    /// The same case against a right-hand side scaled by `factor`.
    pub fn with_rhs_scaled(&self, factor: T) -> Self {
        Self {
            lhs: self.lhs,
            rhs: self.rhs * factor,
        }
    }
}

/// One row of a sweep report.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult<T> {
    pub case_id: String,
    pub check: InequalityCheck<T>,
}

/// Writes `case_id,lhs,rhs,margin,pass`.
pub fn write_report_csv<T: Real, W: Write>(rows: &[CaseResult<T>], mut out: W) -> Result<()> {
    writeln!(out, "case_id,lhs,rhs,margin,pass")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.case_id,
            r.check.lhs.to_f64_lossy(),
            r.check.rhs.to_f64_lossy(),
            r.check.margin().to_f64_lossy(),
            r.check.passed()
        )?;
    }
    Ok(())
}

fn require_positive<T: Real>(f: &[T]) -> Result<()> {
    match f.iter().position(|&v| !(v > T::zero())) {
        Some(index) => Err(Error::ZeroDensity { index }),
        None => Ok(()),
    }
}

fn require_geometry<T: Real>(grid: &Grid<T>, geometry: Geometry, what: &str) -> Result<()> {
    if grid.geometry() != geometry {
        return Err(Error::UnsupportedGeometry(format!(
            "{what} needs a {} grid",
            match geometry {
                Geometry::Line => "line",
                Geometry::Radial => "radial",
            }
        )));
    }
    Ok(())
}

/// Gaussian log-Sobolev inequality for a positive `f` sampled on a line
/// grid: `int f log(f / int f dgamma) dgamma <= 1/2 int |f'|^2 / f dgamma`
/// with `gamma` the standard normal law.
pub fn lsi_check<T: Real>(f: &[T], grid: &Grid<T>) -> Result<InequalityCheck<T>> {
    require_geometry(grid, Geometry::Line, "log-Sobolev check")?;
    require_positive(f)?;
    let norm = (T::lit(2.0) * T::PI()).sqrt();
    let gamma = grid.map(|x| (-x * x * T::lit(0.5)).exp() / norm);
    let fg: Vec<T> = f.iter().zip(&gamma).map(|(&a, &g)| a * g).collect();
    let mean = grid.integrate(&fg)?;
    let ent: Vec<T> = fg.iter().zip(f).map(|(&w, &a)| w * (a / mean).ln()).collect();
    let df = gradient_fd(f, grid)?;
    let fisher: Vec<T> = df
        .iter()
        .zip(f)
        .zip(&gamma)
        .map(|((&d, &a), &g)| d * d / a * g)
        .collect();
    Ok(InequalityCheck {
        lhs: grid.integrate(&ent)?,
        rhs: T::lit(0.5) * grid.integrate(&fisher)?,
    })
}

/// Grid used by the log-Sobolev sweep.
pub fn lsi_grid<T: Real>() -> Result<Grid<T>> {
    Grid::uniform(T::lit(-10.0), T::lit(10.0), 4001, 1, Geometry::Line)
}

/// What to do with the part of a radial function beyond the truncation
/// radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailPolicy {
    /// Fail with [`Error::BoundaryNotNegligible`] unless `|f(R)|` is below
    /// `1e-6 max|f|`.
    Reject,
    /// Continue `f` beyond `R` by the harmonic profile
    /// `f(R) (R / r)^(n-2)` and add its contributions in closed form.
    HarmonicExtension,
}

/// Sharp constant of `||f||_{2n/(n-2)} <= C ||grad f||_2` in `R^n`, from
/// the norms of `(1 + |x|^2)^(-(n-2)/2)` after the substitution
/// `r = tan(theta)`, by composite Simpson with 200000 panels.
pub fn sobolev_constant<T: Real>(n: usize) -> Result<T> {
    if n < 3 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("sharp Sobolev inequality needs n >= 3, got {n}"),
        });
    }
    let nf = n as f64;
    let p = 2.0 * nf / (nf - 2.0);
    let omega: f64 = unit_sphere_area(n);
    let panels = 200_000usize;
    let h = std::f64::consts::FRAC_PI_2 / panels as f64;
    let simpson = |g: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = g(0.0) + g(std::f64::consts::FRAC_PI_2);
        for k in 1..panels {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
        }
        s * h / 3.0
    };
    // |f|^p r^(n-1) dr and |f'|^2 r^(n-1) dr in theta
    let lp = simpson(&|t: f64| (t.sin() * t.cos()).powi(n as i32 - 1));
    let grad = (nf - 2.0).powi(2) * simpson(&|t: f64| t.sin().powi(n as i32 + 1) * t.cos().powi(n as i32 - 3));
    Ok(T::lit((omega * lp).powf(1.0 / p) / (omega * grad).sqrt()))
}

/// The extremal profile `(1 + r^2)^(-(n-2)/2)`.
pub fn sobolev_extremal<T: Real>(n: usize, r: T) -> T {
    (T::one() + r * r).powf(-T::from_usize_lossy(n - 2) * T::lit(0.5))
}

/// Sharp Sobolev inequality for a radial profile on a radial grid of
/// dimension `n >= 3`: `lhs = ||f||_{2n/(n-2)}`, `rhs = C ||grad f||_2`.
pub fn sobolev_check<T: Real>(f: &[T], grid: &Grid<T>, policy: TailPolicy) -> Result<InequalityCheck<T>> {
    require_geometry(grid, Geometry::Radial, "Sobolev check")?;
    let n = grid.dim();
    let c = sobolev_constant::<T>(n)?;
    let nf = T::from_usize_lossy(n);
    let p = T::lit(2.0) * nf / (nf - T::lit(2.0));
    let peak = f.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if peak == T::zero() {
        return Err(Error::ZeroMass);
    }
    let edge = *f.last().unwrap_or(&T::zero());
    let radius = grid.end();
    let (tail_lp, tail_grad) = match policy {
        TailPolicy::Reject => {
            let ratio = edge.abs() / peak;
            if ratio > T::lit(SOBOLEV_BOUNDARY_RTOL) {
                return Err(Error::BoundaryNotNegligible {
                    ratio: ratio.to_f64_lossy(),
                });
            }
            (T::zero(), T::zero())
        }
        TailPolicy::HarmonicExtension => {
            let omega = unit_sphere_area::<T>(n);
            // int_R^inf |f(R)|^p (R/r)^(2n) r^(n-1) dr and
            // int_R^inf ((n-2) f(R) R^(n-2) r^(1-n))^2 r^(n-1) dr
            let lp = omega * edge.abs().powf(p) * radius.powi(n as i32) / nf;
            let grad = omega * (nf - T::lit(2.0)) * edge * edge * radius.powi(n as i32 - 2);
            (lp, grad)
        }
    };
    let fp: Vec<T> = f.iter().map(|&v| v.abs().powf(p)).collect();
    let df = gradient_fd(f, grid)?;
    let g2: Vec<T> = df.iter().map(|&d| d * d).collect();
    let lp = grid.integrate(&fp)? + tail_lp;
    let grad = grid.integrate(&g2)? + tail_grad;
    Ok(InequalityCheck {
        lhs: lp.powf(T::one() / p),
        rhs: c * grad.sqrt(),
    })
}

/// Grid used by the Sobolev sweep: `R = 200`, 20000 cell-centred nodes,
/// `n = 3`.
pub fn sobolev_grid<T: Real>() -> Result<Grid<T>> {
    Grid::radial_staggered(T::lit(200.0), 20000, 3)
}

/// `F(mu) - F(mu_inf) <= |grad_mu F|^2 / (2 rho)` for a functional with a
/// minimizer; `mu` must have the mass of the minimizer on its grid.
pub fn eep_check<T: Real>(f: &FreeEnergyFunctional<T>, mu: &GridDensity<T>) -> Result<InequalityCheck<T>> {
    let owned;
    let min = match f.minimizer() {
        Some(m) if m.grid().same_as(mu.grid()) => m,
        _ => {
            owned = f.clone().with_minimizer_on(mu.grid())?;
            owned.minimizer().expect("minimizer just attached")
        }
    };
    let rho = match f.rho() {
        Some(r) if r > T::zero() => r,
        _ => {
            return Err(Error::Unsupported(format!(
                "{} has no positive convexity constant",
                f.name()
            )))
        }
    };
    let gap = (mu.mass() - min.mass()).abs();
    if gap > T::lit(1e-8) {
        return Err(Error::MassMismatch(format!(
            "density mass differs from the minimizer's by {:e}",
            gap.to_f64_lossy()
        )));
    }
    Ok(InequalityCheck {
        lhs: f.value(mu)? - f.value(min)?,
        rhs: f.production(mu)? / (T::lit(2.0) * rho),
    })
}

/// Entropy/entropy-production inequality of the Fokker-Planck energy
/// (`rho = 1`) on a line grid.
pub fn eep_check_fp<T: Real>(mu: &GridDensity<T>) -> Result<InequalityCheck<T>> {
    require_geometry(mu.grid(), Geometry::Line, "Fokker-Planck EEP check")?;
    eep_check(&FreeEnergyFunctional::fokker_planck(), mu)
}

/// Entropy/entropy-production inequality of the fast-diffusion energy in
/// `R^n` (`rho = (n-1)/n`) on a radial grid of dimension `n`.
pub fn eep_check_fd<T: Real>(n: usize, mu: &GridDensity<T>) -> Result<InequalityCheck<T>> {
    eep_check(&FreeEnergyFunctional::fast_diffusion(n)?, mu)
}

/// Grid of the Fokker-Planck EEP sweep.
pub fn eep_fp_grid<T: Real>() -> Result<Grid<T>> {
    Grid::uniform(T::lit(-10.0), T::lit(10.0), 2001, 1, Geometry::Line)
}

/// Grid of the fast-diffusion EEP sweep: ball of radius 10 in `R^n`.
pub fn eep_fd_grid<T: Real>(n: usize) -> Result<Grid<T>> {
    Grid::radial_staggered(T::lit(10.0), 2000, n)
}

type ScalarFn<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// Data of the generalized relative-entropy inequality: an integrand `H`
/// with `Psi = H'` (and `Psi'`), a domain grid in `R^n`, a reference
/// density `v` and a curvature constant `C`.
pub struct ZugmeyerProblem<T> {
    pub name: String,
    h: ScalarFn<T>,
    psi: ScalarFn<T>,
    psi_prime: ScalarFn<T>,
    grid: Grid<T>,
    v: Vec<T>,
    c: T,
}

impl<T: Real> std::fmt::Debug for ZugmeyerProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZugmeyerProblem")
            .field("name", &self.name)
            .field("dim", &self.grid.dim())
            .field("c", &self.c)
            .finish()
    }
}

impl<T: Real> ZugmeyerProblem<T> {
    pub fn new(
        name: impl Into<String>,
        h: impl Fn(T) -> T + Send + Sync + 'static,
        psi: impl Fn(T) -> T + Send + Sync + 'static,
        psi_prime: impl Fn(T) -> T + Send + Sync + 'static,
        grid: Grid<T>,
        v: Vec<T>,
        c: T,
    ) -> Result<Self> {
        grid.check_len(&v)?;
        require_positive(&v)?;
        Ok(Self {
            name: name.into(),
            h: Box::new(h),
            psi: Box::new(psi),
            psi_prime: Box::new(psi_prime),
            grid,
            v,
            c,
        })
    }

    /// `H(u) = u log u` against `v ~ exp(-a (x - center)^2 / 2)` on a line
    /// grid, where `-(Psi(v))'' = a`; the constant is set to `C = a`.
    pub fn entropy_log_concave(grid: &Grid<T>, a: T, center: T) -> Result<Self> {
        require_geometry(grid, Geometry::Line, "log-concave reference")?;
        let half = T::lit(0.5);
        let v = normalize(&grid.map(|x| (-a * (x - center) * (x - center) * half).exp()), grid)?.into_values();
        Self::new(
            "entropy_log_concave",
            |u: T| u * u.ln(),
            |u: T| u.ln() + T::one(),
            |u: T| T::one() / u,
            grid.clone(),
            v,
            a,
        )
    }

    /// `H(u) = -n u^(1-1/n)` against the fast-diffusion stationary profile
    /// on a radial grid of dimension `n`, where `Psi(v) = -(n-1)(C0 + r^2/2)`
    /// has Hessian eigenvalues `-(n-1)`.
    pub fn fast_diffusion(grid: &Grid<T>, c: T) -> Result<Self> {
        require_geometry(grid, Geometry::Radial, "fast-diffusion reference")?;
        let n = grid.dim();
        let nf = T::from_usize_lossy(n);
        let v = stationary_fd(n, grid)?.density.into_values();
        let inv = T::one() / nf;
        Self::new(
            format!("fast_diffusion({n})"),
            move |u: T| -nf * u.powf(T::one() - inv),
            move |u: T| -(nf - T::one()) * u.powf(-inv),
            move |u: T| (nf - T::one()) * inv * u.powf(-inv - T::one()),
            grid.clone(),
            v,
            c,
        )
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn reference(&self) -> &[T] {
        &self.v
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn with_c(mut self, c: T) -> Self {
        self.c = c;
        self
    }

    /// Points where the displacement-convexity hypothesis is sampled:
    /// every value of `v` and 2001 log-spaced points spanning two decades
    /// beyond its range on both sides.
    fn hypothesis_points(&self) -> Vec<T> {
        let lo = self.v.iter().copied().fold(T::infinity(), T::min) * T::lit(1e-2);
        let hi = self.v.iter().copied().fold(T::zero(), T::max) * T::lit(1e2);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let k = 2000usize;
        let mut pts: Vec<T> = (0..=k)
            .map(|i| (llo + (lhi - llo) * T::from_usize_lossy(i) / T::from_usize_lossy(k)).exp())
            .collect();
        pts.extend_from_slice(&self.v);
        pts
    }

    /// Checks `x U'(x) + (1 - n)/n U(x) >= -1e-10` for `U = x Psi - H`
    /// (so `U' = x Psi'`) and `-Hess(Psi(v)) >= C - 1e-10` on the grid.
    /// On a radial grid the Hessian eigenvalues are `(Psi(v))''` and
    /// `(Psi(v))'/r`. Second differences carry rounding of order
    /// `eps |Psi(v)| / h^2`, which is added to the slack of the curvature
    /// test.
    pub fn check_hypotheses(&self) -> Result<()> {
        let nf = T::from_usize_lossy(self.grid.dim());
        let tol = T::lit(HYPOTHESIS_TOL);
        let k = (T::one() - nf) / nf;
        for (node, x) in self.hypothesis_points().into_iter().enumerate() {
            let u = x * (self.psi)(x) - (self.h)(x);
            let value = x * x * (self.psi_prime)(x) + k * u;
            if !(value >= -tol) {
                return Err(Error::HypothesisViolated {
                    name: "displacement_convexity",
                    node,
                    x: x.to_f64_lossy(),
                    detail: format!("x U'(x) + (1-n)/n U(x) = {:e}", value.to_f64_lossy()),
                });
            }
        }
        let pv: Vec<T> = self.v.iter().map(|&v| (self.psi)(v)).collect();
        let d2 = second_derivative_fd(&pv, &self.grid)?;
        let d1 = gradient_fd(&pv, &self.grid)?;
        let h2 = self.grid.spacing() * self.grid.spacing();
        let nodes = self.grid.nodes();
        let mut worst: Option<(usize, T, T)> = None;
        for i in 0..pv.len() {
            let mut eig = -d2[i];
            if self.grid.geometry() == Geometry::Radial && self.grid.dim() > 1 && nodes[i] > T::zero() {
                eig = eig.min(-d1[i] / nodes[i]);
            }
            let lo = i.saturating_sub(1).min(pv.len() - 4);
            let scale = pv[lo..(lo + 4).min(pv.len())]
                .iter()
                .fold(T::zero(), |m, &v| m.max(v.abs()));
            let slack = tol + T::lit(16.0) * T::epsilon() * scale / h2;
            let deficit = self.c - slack - eig;
            if deficit > T::zero() && worst.is_none_or(|(_, d, _)| deficit > d) {
                worst = Some((i, deficit, eig));
            }
        }
        if let Some((node, _, eig)) = worst {
            return Err(Error::HypothesisViolated {
                name: "curvature_bound",
                node,
                x: nodes[node].to_f64_lossy(),
                detail: format!(
                    "smallest eigenvalue of -Hess Psi(v) is {:e} < C = {:e}",
                    eig.to_f64_lossy(),
                    self.c.to_f64_lossy()
                ),
            });
        }
        Ok(())
    }

    /// Checks the inequality for `u`, which must be positive and carry the
    /// mass of `v` to within `1e-8`. The hypotheses are verified first.
    pub fn check(&self, u: &[T]) -> Result<InequalityCheck<T>> {
        self.check_hypotheses()?;
        self.grid.check_len(u)?;
        require_positive(u)?;
        let mu = self.grid.integrate(u)?;
        let mv = self.grid.integrate(&self.v)?;
        if (mu - mv).abs() > T::lit(1e-8) {
            return Err(Error::MassMismatch(format!(
                "int u = {} but int v = {}",
                mu.to_f64_lossy(),
                mv.to_f64_lossy()
            )));
        }
        let lhs: Vec<T> = u
            .iter()
            .zip(&self.v)
            .map(|(&a, &b)| (self.h)(a) - (self.h)(b) - (a - b) * (self.psi)(b))
            .collect();
        let diff: Vec<T> = u
            .iter()
            .zip(&self.v)
            .map(|(&a, &b)| (self.psi)(b) - (self.psi)(a))
            .collect();
        let g = gradient_fd(&diff, &self.grid)?;
        let rhs: Vec<T> = g.iter().zip(u).map(|(&d, &a)| d * d * a).collect();
        Ok(InequalityCheck {
            lhs: self.grid.integrate(&lhs)?,
            rhs: self.grid.integrate(&rhs)? / (T::lit(2.0) * self.c),
        })
    }

    /// `v (1 + eps shape)` rescaled to the mass of `v`.
    pub fn perturb(&self, p: &bank::Perturbation) -> Result<Vec<T>> {
        let raw: Vec<T> = self
            .v
            .iter()
            .zip(self.grid.nodes())
            .map(|(&v, &x)| v * p.factor(x))
            .collect();
        let scale = self.grid.integrate(&self.v)? / self.grid.integrate(&raw)?;
        Ok(raw.into_iter().map(|u| u * scale).collect())
    }
}

/// The two reference problems of the relative-entropy sweep: entropy on
/// `[0, 1]` against `v ~ exp(-2 (x - 1/2)^2)` with `C = 4`, and the
/// fast-diffusion integrand against its stationary profile on the ball of
/// radius 10 in `R^3` with `C = 2`.
pub fn zugmeyer_reference_problems<T: Real>() -> Result<Vec<ZugmeyerProblem<T>>> {
    let unit = Grid::uniform(T::zero(), T::one(), 1001, 1, Geometry::Line)?;
    let ball = Grid::radial_staggered(T::lit(10.0), 1000, 3)?;
    Ok(vec![
        ZugmeyerProblem::entropy_log_concave(&unit, T::lit(4.0), T::lit(0.5))?,
        ZugmeyerProblem::fast_diffusion(&ball, T::lit(2.0))?,
    ])
}

/// The inequality families with a seeded sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InequalityKind {
    Lsi,
    Sobolev,
    EepFp,
    EepFd,
    Zugmeyer,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 5] = [
        InequalityKind::Lsi,
        InequalityKind::Sobolev,
        InequalityKind::EepFp,
        InequalityKind::EepFd,
        InequalityKind::Zugmeyer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::Lsi => "lsi",
            InequalityKind::Sobolev => "sobolev",
            InequalityKind::EepFp => "eep_fp",
            InequalityKind::EepFd => "eep_fd",
            InequalityKind::Zugmeyer => "zugmeyer",
        }
    }

    /// Size of the default bank.
    pub fn default_count(self) -> usize {
        match self {
            InequalityKind::Sobolev => 50,
            _ => 200,
        }
    }
}

impl std::str::FromStr for InequalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter {
                name: "inequality",
                reason: format!("unknown inequality {s:?}"),
            })
    }
}

enum Cases<T> {
    Lsi(Grid<T>, Vec<TestFunction>),
    Sobolev(Grid<T>, Vec<TestFunction>),
    EepFp(FreeEnergyFunctional<T>, Vec<Vec<(f64, f64, f64)>>),
    EepFd(FreeEnergyFunctional<T>, Vec<bank::Perturbation>),
    Zugmeyer(
        Vec<ZugmeyerProblem<T>>,
        Vec<bank::Perturbation>,
        Vec<bank::Perturbation>,
    ),
}

/// A seeded test bank with its grids and reference data built once; cases
/// are independent and can be evaluated in any order or in parallel.
pub struct Sweep<T> {
    kind: InequalityKind,
    count: usize,
    cases: Cases<T>,
}

impl<T: Real> Sweep<T> {
    /// Builds the bank of `count` cases drawn from `seed`:
    ///
    /// * `lsi`: [`bank::lsi_functions`] on [`lsi_grid`].
    /// * `sobolev`: [`bank::sobolev_functions`] on [`sobolev_grid`].
    /// * `eep_fp`: [`bank::gaussian_mixtures`] on [`eep_fp_grid`].
    /// * `eep_fd`: perturbations of the stationary profile in `R^3` on
    ///   [`eep_fd_grid`], rescaled to unit mass.
    /// * `zugmeyer`: even cases perturb the unit-interval problem, odd cases
    ///   the fast-diffusion problem of [`zugmeyer_reference_problems`].
    pub fn new(kind: InequalityKind, seed: u64, count: usize) -> Result<Self> {
        let cases = match kind {
            InequalityKind::Lsi => Cases::Lsi(lsi_grid()?, bank::lsi_functions(seed, count)),
            InequalityKind::Sobolev => Cases::Sobolev(sobolev_grid()?, bank::sobolev_functions(seed, count)),
            InequalityKind::EepFp => {
                let f = FreeEnergyFunctional::fokker_planck().with_minimizer_on(&eep_fp_grid()?)?;
                Cases::EepFp(f, bank::gaussian_mixtures(seed, count))
            }
            InequalityKind::EepFd => {
                let grid = eep_fd_grid::<T>(3)?;
                let radius = grid.end().to_f64_lossy();
                let f = FreeEnergyFunctional::fast_diffusion(3)?.with_minimizer_on(&grid)?;
                Cases::EepFd(f, bank::perturbations(seed, count, 0.0, radius, 0.5))
            }
            InequalityKind::Zugmeyer => {
                let problems = zugmeyer_reference_problems::<T>()?;
                for p in &problems {
                    p.check_hypotheses()?;
                }
                Cases::Zugmeyer(
                    problems,
                    bank::perturbations(seed, count, 0.0, 1.0, 0.5),
                    bank::perturbations(seed.wrapping_add(1), count, 0.0, 10.0, 0.5),
                )
            }
        };
        Ok(Self { kind, count, cases })
    }

    pub fn kind(&self) -> InequalityKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Evaluates case `k < len()`.
    pub fn run_case(&self, k: usize) -> Result<CaseResult<T>> {
        if k >= self.count {
            return Err(Error::InvalidParameter {
                name: "case",
                reason: format!("case {k} out of range for a bank of {}", self.count),
            });
        }
        let (case_id, check) = match &self.cases {
            Cases::Lsi(grid, fs) => (format!("lsi-{k:03}"), lsi_check(&fs[k].sample(grid.nodes()), grid)?),
            Cases::Sobolev(grid, fs) => (
                format!("sobolev-{k:03}"),
                sobolev_check(&fs[k].sample(grid.nodes()), grid, TailPolicy::Reject)?,
            ),
            Cases::EepFp(f, mixtures) => {
                let grid = f.minimizer().expect("minimizer attached").grid();
                let mu = GridDensity::from_fn(grid, |x| {
                    mixtures[k]
                        .iter()
                        .map(|&(w, m, s)| {
                            let z = (x - T::lit(m)) / T::lit(s);
                            T::lit(w / s) * (-z * z * T::lit(0.5)).exp()
                        })
                        .fold(T::zero(), |a, b| a + b)
                })?;
                (format!("eep_fp-{k:03}"), eep_check(f, &mu)?)
            }
            Cases::EepFd(f, perts) => {
                let base = f.minimizer().expect("minimizer attached");
                let grid = base.grid();
                let raw: Vec<T> = base
                    .values()
                    .iter()
                    .zip(grid.nodes())
                    .map(|(&v, &r)| v * perts[k].factor(r))
                    .collect();
                (format!("eep_fd-{k:03}"), eep_check(f, &normalize(&raw, grid)?)?)
            }
            Cases::Zugmeyer(problems, line, ball) => {
                let (problem, pert) = if k.is_multiple_of(2) {
                    (&problems[0], &line[k])
                } else {
                    (&problems[1], &ball[k])
                };
                (
                    format!("zugmeyer-{k:03}-{}", problem.name),
                    problem.check(&problem.perturb(pert)?)?,
                )
            }
        };
        Ok(CaseResult { case_id, check })
    }

    /// Evaluates every case in order.
    pub fn run(&self) -> Result<Vec<CaseResult<T>>> {
        (0..self.count).map(|k| self.run_case(k)).collect()
    }
}

pub fn lsi_sweep<T: Real>(seed: u64, count: usize) -> Result<Vec<CaseResult<T>>> {
    Sweep::new(InequalityKind::Lsi, seed, count)?.run()
}

pub fn sobolev_sweep<T: Real>(seed: u64, count: usize) -> Result<Vec<CaseResult<T>>> {
    Sweep::new(InequalityKind::Sobolev, seed, count)?.run()
}

pub fn eep_fp_sweep<T: Real>(seed: u64, count: usize) -> Result<Vec<CaseResult<T>>> {
    Sweep::new(InequalityKind::EepFp, seed, count)?.run()
}

pub fn eep_fd_sweep<T: Real>(seed: u64, count: usize) -> Result<Vec<CaseResult<T>>> {
    Sweep::new(InequalityKind::EepFd, seed, count)?.run()
}

pub fn zugmeyer_sweep<T: Real>(seed: u64, count: usize) -> Result<Vec<CaseResult<T>>> {
    Sweep::new(InequalityKind::Zugmeyer, seed, count)?.run()
}
