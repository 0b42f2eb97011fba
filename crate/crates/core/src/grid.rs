//! Uniform grids, discrete densities, trapezoid quadrature and finite
//! differences.
//!
//! Two geometries are supported. A `Line` grid samples a function on an
//! interval of the real line. A `Radial` grid samples the radial profile of a
//! radially symmetric function on a ball of `R^n`; quadrature then carries the
//! sphere factor `omega_n r^(n-1)`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::io::{BufRead, Write};
use std::sync::Arc;

/// Minimum number of nodes accepted by [`Grid::uniform`].
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Line,
    Radial,
}

impl Geometry {
    pub fn coordinate_name(self) -> &'static str {
        match self {
            Geometry::Line => "x",
            Geometry::Radial => "r",
        }
    }
}

#[derive(Debug)]
struct GridData<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    spacing: T,
    dim: usize,
    geometry: Geometry,
}

/// Uniform grid. Cloning is cheap: the node and weight arrays are shared.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    inner: Arc<GridData<T>>,
}

/// Surface area of the unit sphere in `R^n` (`omega_1 = 2`, `omega_2 = 2 pi`).
pub fn unit_sphere_area<T: Real>(n: usize) -> T {
    assert!(n >= 1);
    let (mut area, mut k) = if n % 2 == 1 {
        (T::lit(2.0), 1usize)
    } else {
        (T::lit(2.0) * T::PI(), 2usize)
    };
    while k < n {
        area = area * T::lit(2.0) * T::PI() / T::from_usize_lossy(k);
        k += 2;
    }
    area
}

impl<T: Real> Grid<T> {
    /// Uniform grid with `n_nodes` nodes on `[a, b]` in ambient dimension
    /// `dim`.
    pub fn uniform(a: T, b: T, n_nodes: usize, dim: usize, geometry: Geometry) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidGrid(format!("need a < b, got a = {a}, b = {b}")));
        }
        if n_nodes < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidGrid("ambient dimension must be >= 1".into()));
        }
        match geometry {
            Geometry::Radial if a < T::zero() => {
                return Err(Error::InvalidGrid(format!("radial grid needs a >= 0, got a = {a}")))
            }
            Geometry::Line if dim != 1 => {
                return Err(Error::InvalidGrid(format!(
                    "line geometry is one-dimensional, got n = {dim}"
                )))
            }
            _ => {}
        }
        let spacing = (b - a) / T::from_usize_lossy(n_nodes - 1);
        let nodes: Vec<T> = (0..n_nodes)
            .map(|i| {
                if i == n_nodes - 1 {
                    b
                } else {
                    a + spacing * T::from_usize_lossy(i)
                }
            })
            .collect();
        let half = T::lit(0.5);
        let omega = unit_sphere_area::<T>(dim);
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let trap = if i == 0 || i == n_nodes - 1 {
                    spacing * half
                } else {
                    spacing
                };
                match geometry {
                    Geometry::Line => trap,
                    Geometry::Radial => trap * omega * x.powi(dim as i32 - 1),
                }
            })
            .collect();
        Ok(Self {
            inner: Arc::new(GridData {
                nodes,
                weights,
                spacing,
                dim,
                geometry,
            }),
        })
    }

    /// Cell-centred radial grid on the ball of radius `radius`: nodes at
    /// `(i + 1/2) h` with `h = radius / n_nodes`, so no node sits at the
    /// origin.
    pub fn radial_staggered(radius: T, n_nodes: usize, dim: usize) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {n_nodes}"
            )));
        }
        let h = radius / T::from_usize_lossy(n_nodes);
        Self::uniform(
            h * T::lit(0.5),
            radius - h * T::lit(0.5),
            n_nodes,
            dim,
            Geometry::Radial,
        )
    }

    pub fn nodes(&self) -> &[T] {
        &self.inner.nodes
    }

    /// Trapezoid weights, including the radial sphere factor.
    pub fn weights(&self) -> &[T] {
        &self.inner.weights
    }

    pub fn spacing(&self) -> T {
        self.inner.spacing
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn geometry(&self) -> Geometry {
        self.inner.geometry
    }

    pub fn len(&self) -> usize {
        self.inner.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.nodes.is_empty()
    }

    pub fn start(&self) -> T {
        self.inner.nodes[0]
    }

    pub fn end(&self) -> T {
        *self.inner.nodes.last().unwrap()
    }

    pub fn same_as(&self, other: &Grid<T>) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.geometry() == other.geometry()
                && self.dim() == other.dim()
                && self.len() == other.len()
                && self.start() == other.start()
                && self.end() == other.end())
    }

    pub(crate) fn ensure_same(&self, other: &Grid<T>) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn check_len(&self, samples: &[T]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// Samples `f` at every node.
    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Vec<T> {
        self.nodes().iter().map(|&x| f(x)).collect()
    }

    /// Trapezoid rule (with the radial weight on radial grids).
    pub fn integrate(&self, samples: &[T]) -> Result<T> {
        self.check_len(samples)?;
        Ok(self.weights().iter().zip(samples).map(|(&w, &f)| w * f).sum())
    }
}

/// Free-function form of [`Grid::uniform`].
pub fn make_uniform_grid<T: Real>(a: T, b: T, n_nodes: usize, dim: usize, geometry: Geometry) -> Result<Grid<T>> {
    Grid::uniform(a, b, n_nodes, dim, geometry)
}

/// Free-function form of [`Grid::integrate`].
pub fn integrate<T: Real>(samples: &[T], grid: &Grid<T>) -> Result<T> {
    grid.integrate(samples)
}

/// First derivative: central differences in the interior and second-order
/// one-sided stencils at both ends. Exact on quadratics.
pub fn gradient_fd<T: Real>(samples: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    grid.check_len(samples)?;
    gradient_uniform(samples, grid.spacing())
}

pub(crate) fn gradient_uniform<T: Real>(f: &[T], h: T) -> Result<Vec<T>> {
    let n = f.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let two_h = T::lit(2.0) * h;
    let mut out = vec![T::zero(); n];
    out[0] = (T::lit(-3.0) * f[0] + T::lit(4.0) * f[1] - f[2]) / two_h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / two_h;
    }
    out[n - 1] = (T::lit(3.0) * f[n - 1] - T::lit(4.0) * f[n - 2] + f[n - 3]) / two_h;
    Ok(out)
}

/// Second derivative: three-point stencil in the interior, four-point
/// second-order one-sided stencils at the ends.
pub fn second_derivative_fd<T: Real>(samples: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    grid.check_len(samples)?;
    let f = samples;
    let n = f.len();
    if n < 4 {
        return Err(Error::TooFewSamples { needed: 4, got: n });
    }
    let h2 = grid.spacing() * grid.spacing();
    let mut out = vec![T::zero(); n];
    out[0] = (T::lit(2.0) * f[0] - T::lit(5.0) * f[1] + T::lit(4.0) * f[2] - f[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - T::lit(2.0) * f[i] + f[i - 1]) / h2;
    }
    out[n - 1] = (T::lit(2.0) * f[n - 1] - T::lit(5.0) * f[n - 2] + T::lit(4.0) * f[n - 3] - f[n - 4]) / h2;
    Ok(out)
}

/// `f'/r` on a radial grid, replaced by `f''` at a node sitting on the
/// origin.
pub(crate) fn radial_over_r<T: Real>(d1: &[T], d2: &[T], nodes: &[T]) -> Vec<T> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| if r == T::zero() { d2[i] } else { d1[i] / r })
        .collect()
}

/// Laplacian of a grid function: `f''` on a line, `f'' + (n-1) f'/r` for a
/// radial profile.
pub fn laplacian_fd<T: Real>(samples: &[T], grid: &Grid<T>) -> Result<Vec<T>> {
    let d2 = second_derivative_fd(samples, grid)?;
    match grid.geometry() {
        Geometry::Line => Ok(d2),
        Geometry::Radial => {
            let d1 = gradient_fd(samples, grid)?;
            let over_r = radial_over_r(&d1, &d2, grid.nodes());
            let k = T::from_usize_lossy(grid.dim() - 1);
            Ok(d2.iter().zip(&over_r).map(|(&a, &b)| a + k * b).collect())
        }
    }
}

/// Probability density sampled on a grid.
#[derive(Debug, Clone)]
pub struct GridDensity<T> {
    grid: Grid<T>,
    values: Vec<T>,
    mass: T,
}

impl<T: Real> GridDensity<T> {
    /// Wraps nonnegative samples without rescaling; the quadrature mass is
    /// cached.
    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        grid.check_len(&values)?;
        if let Some((index, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
            return Err(Error::NegativeDensity {
                index,
                value: v.to_f64_lossy(),
            });
        }
        let mass = grid.integrate(&values)?;
        Ok(Self { grid, values, mass })
    }

    /// Samples an unnormalised nonnegative function and normalises it.
    pub fn from_fn<F: Fn(T) -> T>(grid: &Grid<T>, f: F) -> Result<Self> {
        normalize(&grid.map(f), grid)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// `int g dmu` for a function of the coordinate.
    pub fn expect<F: Fn(T) -> T>(&self, g: F) -> T {
        self.grid
            .weights()
            .iter()
            .zip(self.grid.nodes())
            .zip(&self.values)
            .map(|((&w, &x), &m)| w * g(x) * m)
            .sum()
    }

    /// `int h_i mu_i` for per-node samples `h`.
    pub fn expect_samples(&self, h: &[T]) -> Result<T> {
        self.grid.check_len(h)?;
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(h)
            .zip(&self.values)
            .map(|((&w, &f), &m)| w * f * m)
            .sum())
    }

    pub fn mean(&self) -> T {
        self.expect(|x| x) / self.mass
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.expect(|x| (x - m) * (x - m)) / self.mass
    }

    /// `int |mu - nu|` by trapezoid quadrature.
    pub fn l1_distance(&self, other: &GridDensity<T>) -> Result<T> {
        self.grid.ensure_same(&other.grid)?;
        let diff: Vec<T> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .collect();
        self.grid.integrate(&diff)
    }

    /// L1 distance to an analytic density evaluated at the nodes.
    pub fn l1_distance_to<F: Fn(T) -> T>(&self, f: F) -> T {
        self.grid
            .weights()
            .iter()
            .zip(self.grid.nodes())
            .zip(&self.values)
            .map(|((&w, &x), &m)| w * (m - f(x)).abs())
            .sum()
    }

    /// Writes `x,value` (or `r,value`) rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{},value", self.grid.geometry().coordinate_name())?;
        for (x, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e}", x.to_f64_lossy(), v.to_f64_lossy())?;
        }
        Ok(())
    }

    /// Reads the format written by [`GridDensity::write_csv`]. The nodes must
    /// be uniform; `dim` is the ambient dimension of a radial profile.
    /// Values are taken as-is (not renormalised).
    pub fn read_csv<R: BufRead>(input: R, dim: usize) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))??;
        let geometry = match header.trim() {
            "x,value" => Geometry::Line,
            "r,value" => Geometry::Radial,
            other => return Err(Error::Parse(format!("unexpected header `{other}`"))),
        };
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<T> {
                let s = s.ok_or_else(|| Error::Parse(format!("row {}: missing field", lineno + 2)))?;
                s.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))
            };
            xs.push(parse(parts.next())?);
            vs.push(parse(parts.next())?);
        }
        if xs.len() < 2 {
            return Err(Error::Parse("need at least two rows".into()));
        }
        let dim = if geometry == Geometry::Line { 1 } else { dim };
        let grid = Grid::uniform(xs[0], *xs.last().unwrap(), xs.len(), dim, geometry)?;
        let tol = grid.spacing() * T::lit(1e-9);
        for (i, (&a, &b)) in xs.iter().zip(grid.nodes()).enumerate() {
            if (a - b).abs() > tol.max(b.abs() * T::lit(1e-12)) {
                return Err(Error::Parse(format!("row {}: nodes are not uniform", i + 2)));
            }
        }
        Self::from_values(grid, vs)
    }
}

/// Rescales nonnegative samples to unit quadrature mass.
pub fn normalize<T: Real>(samples: &[T], grid: &Grid<T>) -> Result<GridDensity<T>> {
    grid.check_len(samples)?;
    if let Some((index, &v)) = samples.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
        return Err(Error::NegativeDensity {
            index,
            value: v.to_f64_lossy(),
        });
    }
    let mass = grid.integrate(samples)?;
    if !(mass > T::zero()) || !mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    let values: Vec<T> = samples.iter().map(|&v| v / mass).collect();
    GridDensity::from_values(grid.clone(), values)
}

/// Gradient field `grad Phi` sampled on a grid (an Otto tangent vector).
#[derive(Debug, Clone)]
pub struct TangentField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> TangentField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        grid.check_len(&values)?;
        Ok(Self { grid, values })
    }

    /// `grad Phi` from a scalar potential.
    pub fn from_potential(grid: &Grid<T>, phi: &[T]) -> Result<Self> {
        Ok(Self {
            grid: grid.clone(),
            values: gradient_fd(phi, grid)?,
        })
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![T::zero(); grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}
