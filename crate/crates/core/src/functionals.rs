//! Entropy and free-energy functionals on grid densities, with their Otto
//! (Wasserstein) gradients and Hessian quadratic forms.
//!
//! | kind | value | Otto gradient | convexity |
//! |------|-------|---------------|-----------|
//! | Boltzmann entropy | `int mu log mu` | `grad log mu` | 0 |
//! | Fokker-Planck | `int mu log mu + |x|^2/2 mu` | `grad(log mu + |x|^2/2)` | 1 |
//! | fast diffusion (n) | `int (-mu^(-1/n) + (n-1)/n |x|^2/2) mu` | `(n-1)/n grad(-mu^(-1/n) + |x|^2/2)` | (n-1)/n |
//! | `L^p` | `int mu^p` | not provided | none |
//!
//! On radial grids, `x` is the radius and second derivatives of a radial
//! potential are expanded as `|Hess Phi|^2 = Phi''^2 + (n-1)(Phi'/r)^2` and
//! `Lap Phi = Phi'' + (n-1) Phi'/r`.

use crate::error::{Error, Result};
use crate::grid::{
    gradient_fd, laplacian_fd, radial_over_r, second_derivative_fd, Geometry, Grid, GridDensity, TangentField,
};
use crate::scalar::{safe_ln, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind<T> {
    BoltzmannEntropy,
    FokkerPlanck,
    FastDiffusion { n: usize },
    LpNorm { p: T },
}

impl<T: Real> FunctionalKind<T> {
    pub fn name(&self) -> String {
        match self {
            FunctionalKind::BoltzmannEntropy => "boltzmann_entropy".into(),
            FunctionalKind::FokkerPlanck => "fp_free_energy".into(),
            FunctionalKind::FastDiffusion { n } => format!("fd_free_energy({n})"),
            FunctionalKind::LpNorm { p } => format!("lp_norm({p})"),
        }
    }
}

/// A free-energy functional together with its convexity constant and,
/// when computed, its minimizer on a given grid.
#[derive(Debug, Clone)]
pub struct FreeEnergyFunctional<T> {
    kind: FunctionalKind<T>,
    minimizer: Option<GridDensity<T>>,
}

/// Second-derivative data of a potential `Phi` on a grid.
struct HessianParts<T> {
    grad_sq: Vec<T>,
    hess_sq: Vec<T>,
    laplacian: Vec<T>,
}

fn hessian_parts<T: Real>(grid: &Grid<T>, phi: &[T]) -> Result<HessianParts<T>> {
    let d1 = gradient_fd(phi, grid)?;
    let d2 = second_derivative_fd(phi, grid)?;
    let grad_sq: Vec<T> = d1.iter().map(|&g| g * g).collect();
    match grid.geometry() {
        Geometry::Line => Ok(HessianParts {
            grad_sq,
            hess_sq: d2.iter().map(|&v| v * v).collect(),
            laplacian: d2,
        }),
        Geometry::Radial => {
            let k = T::from_usize_lossy(grid.dim() - 1);
            let over_r = radial_over_r(&d1, &d2, grid.nodes());
            Ok(HessianParts {
                grad_sq,
                hess_sq: d2.iter().zip(&over_r).map(|(&a, &b)| a * a + k * b * b).collect(),
                laplacian: d2.iter().zip(&over_r).map(|(&a, &b)| a + k * b).collect(),
            })
        }
    }
}

pub(crate) fn ensure_positive<T: Real>(mu: &GridDensity<T>) -> Result<()> {
    match mu.values().iter().position(|&v| !(v > T::zero())) {
        Some(index) => Err(Error::ZeroDensity { index }),
        None => Ok(()),
    }
}

impl<T: Real> FreeEnergyFunctional<T> {
    pub fn new(kind: FunctionalKind<T>) -> Result<Self> {
        match kind {
            FunctionalKind::FastDiffusion { n: 0 } => Err(Error::InvalidParameter {
                name: "n",
                reason: "dimension must be >= 1".into(),
            }),
            FunctionalKind::LpNorm { p } if !(p > T::one()) => Err(Error::InvalidParameter {
                name: "p",
                reason: format!("need p > 1, got {p}"),
            }),
            _ => Ok(Self { kind, minimizer: None }),
        }
    }

    pub fn boltzmann() -> Self {
        Self {
            kind: FunctionalKind::BoltzmannEntropy,
            minimizer: None,
        }
    }

    pub fn fokker_planck() -> Self {
        Self {
            kind: FunctionalKind::FokkerPlanck,
            minimizer: None,
        }
    }

    pub fn fast_diffusion(n: usize) -> Result<Self> {
        Self::new(FunctionalKind::FastDiffusion { n })
    }

    pub fn lp_norm(p: T) -> Result<Self> {
        Self::new(FunctionalKind::LpNorm { p })
    }

    /// Attaches the minimizer on `grid`: the discrete standard Gaussian for
    /// the Fokker-Planck energy, the normalised `(C + |x|^2/2)^(-n)` for the
    /// fast-diffusion energy.
    pub fn with_minimizer_on(mut self, grid: &Grid<T>) -> Result<Self> {
        let min = match self.kind {
            FunctionalKind::FokkerPlanck => GridDensity::from_fn(grid, |x| (-x * x * T::lit(0.5)).exp())?,
            FunctionalKind::FastDiffusion { n } => crate::pde::stationary_fd(n, grid)?.density,
            _ => {
                return Err(Error::Unsupported(format!(
                    "{} has no minimizer among probability densities",
                    self.kind.name()
                )))
            }
        };
        self.minimizer = Some(min);
        Ok(self)
    }

    pub fn kind(&self) -> FunctionalKind<T> {
        self.kind
    }

    pub fn name(&self) -> String {
        self.kind.name()
    }

    /// Claimed lower bound of the Otto Hessian.
    pub fn rho(&self) -> Option<T> {
        match self.kind {
            FunctionalKind::BoltzmannEntropy => Some(T::zero()),
            FunctionalKind::FokkerPlanck => Some(T::one()),
            FunctionalKind::FastDiffusion { n } => Some(T::from_usize_lossy(n - 1) / T::from_usize_lossy(n)),
            FunctionalKind::LpNorm { .. } => None,
        }
    }

    pub fn minimizer(&self) -> Option<&GridDensity<T>> {
        self.minimizer.as_ref()
    }

    fn check_geometry(&self, grid: &Grid<T>) -> Result<()> {
        if let FunctionalKind::FastDiffusion { n } = self.kind {
            if grid.dim() != n {
                return Err(Error::UnsupportedGeometry(format!(
                    "fd_free_energy({n}) on a grid of dimension {}",
                    grid.dim()
                )));
            }
            if n > 1 && grid.geometry() != Geometry::Radial {
                return Err(Error::UnsupportedGeometry(
                    "fast-diffusion energy in dimension > 1 needs a radial grid".into(),
                ));
            }
        }
        Ok(())
    }

    /// Quadrature value of the functional.
    pub fn value(&self, mu: &GridDensity<T>) -> Result<T> {
        let grid = mu.grid();
        self.check_geometry(grid)?;
        let half = T::lit(0.5);
        let integrand: Vec<T> = match self.kind {
            FunctionalKind::BoltzmannEntropy => mu.values().iter().map(|&m| m * safe_ln(m)).collect(),
            FunctionalKind::FokkerPlanck => mu
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(&m, &x)| m * (safe_ln(m) + half * x * x))
                .collect(),
            FunctionalKind::FastDiffusion { n } => {
                ensure_positive(mu)?;
                let nf = T::from_usize_lossy(n);
                let c = (nf - T::one()) / nf;
                let expo = T::one() - T::one() / nf;
                mu.values()
                    .iter()
                    .zip(grid.nodes())
                    .map(|(&m, &x)| -m.powf(expo) + c * half * x * x * m)
                    .collect()
            }
            FunctionalKind::LpNorm { p } => mu.values().iter().map(|&m| m.powf(p)).collect(),
        };
        grid.integrate(&integrand)
    }

    /// Scalar whose gradient is the Otto gradient (the first variation up to
    /// the factor `(n-1)/n` for the fast-diffusion energy).
    fn potential_samples(&self, mu: &GridDensity<T>) -> Result<(Vec<T>, T)> {
        if let FunctionalKind::LpNorm { .. } = self.kind {
            return Err(Error::Unsupported("Otto gradient of the L^p functional".into()));
        }
        ensure_positive(mu)?;
        let half = T::lit(0.5);
        let nodes = mu.grid().nodes();
        let vals = mu.values();
        Ok(match self.kind {
            FunctionalKind::BoltzmannEntropy => (vals.iter().map(|&m| m.ln()).collect(), T::one()),
            FunctionalKind::FokkerPlanck => (
                vals.iter().zip(nodes).map(|(&m, &x)| m.ln() + half * x * x).collect(),
                T::one(),
            ),
            FunctionalKind::FastDiffusion { n } => {
                let nf = T::from_usize_lossy(n);
                (
                    vals.iter()
                        .zip(nodes)
                        .map(|(&m, &x)| -m.powf(-T::one() / nf) + half * x * x)
                        .collect(),
                    (nf - T::one()) / nf,
                )
            }
            FunctionalKind::LpNorm { .. } => unreachable!(),
        })
    }

    /// `grad_mu F` sampled on the grid.
    pub fn otto_gradient(&self, mu: &GridDensity<T>) -> Result<TangentField<T>> {
        self.check_geometry(mu.grid())?;
        let (pot, factor) = self.potential_samples(mu)?;
        let g = gradient_fd(&pot, mu.grid())?;
        TangentField::new(mu.grid().clone(), g.into_iter().map(|v| v * factor).collect())
    }

    /// `|grad_mu F|^2_mu = int |grad_mu F|^2 dmu`; the Fisher information for
    /// the Boltzmann entropy.
    pub fn production(&self, mu: &GridDensity<T>) -> Result<T> {
        let g = self.otto_gradient(mu)?;
        let sq: Vec<T> = g.values().iter().map(|&v| v * v).collect();
        mu.expect_samples(&sq)
    }

    /// `Hess_mu F(grad Phi, grad Phi)` for a scalar potential `phi`.
    pub fn otto_hessian_quadform(&self, mu: &GridDensity<T>, phi: &[T]) -> Result<T> {
        let grid = mu.grid();
        self.check_geometry(grid)?;
        let parts = hessian_parts(grid, phi)?;
        match self.kind {
            FunctionalKind::BoltzmannEntropy => mu.expect_samples(&parts.hess_sq),
            FunctionalKind::FokkerPlanck => {
                let s: Vec<T> = parts.hess_sq.iter().zip(&parts.grad_sq).map(|(&h, &g)| h + g).collect();
                mu.expect_samples(&s)
            }
            FunctionalKind::FastDiffusion { n } => {
                let nf = T::from_usize_lossy(n);
                let c = (nf - T::one()) / nf;
                let s: Vec<T> = parts
                    .hess_sq
                    .iter()
                    .zip(&parts.laplacian)
                    .zip(&parts.grad_sq)
                    .map(|((&h, &l), &g)| (h - l * l / nf) / nf + c * g)
                    .collect();
                mu.expect_samples(&s)
            }
            FunctionalKind::LpNorm { .. } => Err(Error::Unsupported("Otto Hessian of the L^p functional".into())),
        }
    }
}

/// Metric term `int |grad Phi|^2 dmu`, the right-hand side of the Hessian
/// lower bounds.
pub fn dirichlet_energy<T: Real>(mu: &GridDensity<T>, phi: &[T]) -> Result<T> {
    let g = gradient_fd(phi, mu.grid())?;
    let sq: Vec<T> = g.iter().map(|&v| v * v).collect();
    mu.expect_samples(&sq)
}

/// Both sides of `int (1/2 Lap|grad Phi|^2 - grad Phi . grad Lap Phi) dmu =
/// int |Hess Phi|^2 dmu`, each evaluated by its own chain of finite
/// differences.
pub fn hessian_identity_check<T: Real>(mu: &GridDensity<T>, phi: &[T]) -> Result<(T, T)> {
    let grid = mu.grid();
    let d1 = gradient_fd(phi, grid)?;
    let grad_sq: Vec<T> = d1.iter().map(|&g| g * g).collect();
    let lap_grad_sq = laplacian_fd(&grad_sq, grid)?;
    let lap_phi = laplacian_fd(phi, grid)?;
    let grad_lap = gradient_fd(&lap_phi, grid)?;
    let half = T::lit(0.5);
    let lhs_integrand: Vec<T> = lap_grad_sq
        .iter()
        .zip(&d1)
        .zip(&grad_lap)
        .map(|((&a, &g), &b)| half * a - g * b)
        .collect();
    let parts = hessian_parts(grid, phi)?;
    Ok((mu.expect_samples(&lhs_integrand)?, mu.expect_samples(&parts.hess_sq)?))
}
