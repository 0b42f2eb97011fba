//! Entropy-dissipating gradient flows and the functional inequalities they
//! produce.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`quantile`], [`tridiag`]: uniform line/radial grids, trapezoid
//!   quadrature, finite differences, CDF/quantile transforms.
//! * [`functionals`]: Boltzmann entropy, the Fokker-Planck and fast-diffusion
//!   free energies and the `L^p` functional, with Otto gradients and Hessian
//!   quadratic forms.
//! * [`finite_flow`]: `x' = -grad E` in `R^n` with the Bakry-Emery diagnostic
//!   chain.
//! * [`pde`]: conservative, positivity-preserving solvers for the heat,
//!   Fokker-Planck and fast-diffusion equations, plus dissipation reports.
//! * [`wasserstein`]: one-dimensional optimal transport, continuity-equation
//!   velocities, McCann geodesics and path actions.
//! * [`jko`]: the minimizing-movement scheme in quantile coordinates.
//! * [`inequalities`]: log-Sobolev, Sobolev, entropy/entropy-production and
//!   Zugmeyer-type checkers with seeded test banks.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! verification tolerances are calibrated for.

// `!(x > 0)` is deliberate throughout: it rejects NaN along with
// nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bank;
pub mod error;
pub mod finite_flow;
pub mod functionals;
pub mod grid;
pub mod inequalities;
pub mod jko;
pub mod pde;
pub mod quantile;
pub mod scalar;
pub mod trajectory;
pub mod tridiag;
pub mod wasserstein;

pub use error::{Error, Result};
pub use functionals::{FreeEnergyFunctional, FunctionalKind};
pub use grid::{gradient_fd, integrate, make_uniform_grid, normalize, Geometry, Grid, GridDensity, TangentField};
pub use quantile::{cdf_and_quantile, QuantileRep};
pub use scalar::Real;
pub use trajectory::Trajectory;

/// Double-precision grid.
pub type Grid64 = Grid<f64>;
/// Double-precision density.
pub type Density64 = GridDensity<f64>;
/// Double-precision tangent field.
pub type Field64 = TangentField<f64>;
/// Double-precision quantile representation.
pub type Quantile64 = QuantileRep<f64>;
/// Double-precision free-energy functional.
pub type Functional64 = FreeEnergyFunctional<f64>;
/// Double-precision potential for finite-dimensional flows.
pub type Potential64 = finite_flow::PotentialSpec<f64>;
/// Double-precision PDE flow configuration.
pub type FlowSpec64 = pde::FlowSpec<f64>;
/// Double-precision minimizing-movement configuration.
pub type JkoConfig64 = jko::JkoConfig<f64>;
