//! Monotone quantile representation of one-dimensional probability
//! measures and the transforms between it and grid densities.
//!
//! Quantile levels are the midpoints `q_j = (j + 1/2) / M` of a uniform
//! partition of `(0, 1)`; each node carries mass `1/M`.

use crate::error::{Error, Result};
use crate::grid::{Geometry, Grid, GridDensity};
use crate::scalar::Real;

/// Minimum quantile resolution accepted by [`cdf_and_quantile`].
pub const MIN_QUANTILE_NODES: usize = 8;

/// Nondecreasing quantile function sampled at `q_j = (j + 1/2)/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRep<T> {
    values: Vec<T>,
}

impl<T: Real> QuantileRep<T> {
    /// Fails unless `values` is nondecreasing (no tolerance).
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: values.len(),
            });
        }
        if let Some(i) = values.windows(2).position(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidParameter {
                name: "quantile",
                reason: format!("not nondecreasing at index {}", i + 1),
            });
        }
        Ok(Self { values })
    }

    /// Quantile representation of an analytic inverse CDF.
    pub fn from_inverse_cdf<F: Fn(T) -> T>(m: usize, inv: F) -> Result<Self> {
        Self::new((0..m).map(|j| inv(level::<T>(j, m))).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mass carried by each node.
    pub fn dq(&self) -> T {
        T::one() / T::from_usize_lossy(self.values.len())
    }

    pub fn level(&self, j: usize) -> T {
        level(j, self.values.len())
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.dq()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.values.iter().map(|&x| (x - m) * (x - m)).sum::<T>() * self.dq()
    }

    /// Pointwise affine map `x -> a + b x` (`b > 0`).
    pub fn affine(&self, shift: T, scale: T) -> Self {
        Self {
            values: self.values.iter().map(|&x| shift + scale * x).collect(),
        }
    }

    /// Density on a line grid whose CDF is the piecewise-linear interpolant
    /// of `(X_j, q_j)`, closed by half-cell tails of mass `1/(2M)` at both
    /// ends. The dual-cell mass of each node is divided by its trapezoid
    /// weight; the result is renormalised over the grid. Values are zero
    /// outside the support of the interpolated CDF.
    pub fn to_density(&self, grid: &Grid<T>) -> Result<GridDensity<T>> {
        if grid.geometry() != Geometry::Line {
            return Err(Error::UnsupportedGeometry(
                "quantile to density conversion is defined on line grids".into(),
            ));
        }
        let cdf = PiecewiseCdf::from_quantile(self);
        let n = grid.len();
        let h = grid.spacing();
        let half = T::lit(0.5);
        let nodes = grid.nodes();
        // dual cell boundaries a, x0+h/2, ..., b
        let mut bounds = Vec::with_capacity(n + 1);
        bounds.push(nodes[0]);
        for &x in &nodes[..n - 1] {
            bounds.push(x + h * half);
        }
        bounds.push(nodes[n - 1]);
        let c = cdf.eval_sorted(&bounds);
        let values: Vec<T> = (0..n)
            .map(|i| ((c[i + 1] - c[i]).max(T::zero())) / grid.weights()[i])
            .collect();
        crate::grid::normalize(&values, grid)
    }
}

#[inline]
pub(crate) fn level<T: Real>(j: usize, m: usize) -> T {
    (T::from_usize_lossy(j) + T::lit(0.5)) / T::from_usize_lossy(m)
}

/// Piecewise-linear CDF through `(knots[k], probs[k])`, constant outside.
#[derive(Debug, Clone)]
pub(crate) struct PiecewiseCdf<T> {
    pub knots: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Real> PiecewiseCdf<T> {
    pub fn from_quantile(q: &QuantileRep<T>) -> Self {
        let x = q.values();
        let m = x.len();
        let half = T::lit(0.5);
        let mut knots = Vec::with_capacity(m + 2);
        let mut probs = Vec::with_capacity(m + 2);
        knots.push(x[0] - (x[1] - x[0]) * half);
        probs.push(T::zero());
        for (j, &xj) in x.iter().enumerate() {
            knots.push(xj);
            probs.push(level(j, m));
        }
        knots.push(x[m - 1] + (x[m - 1] - x[m - 2]) * half);
        probs.push(T::one());
        Self { knots, probs }
    }

    /// Evaluates at nondecreasing query points in one merge pass.
    pub fn eval_sorted(&self, xs: &[T]) -> Vec<T> {
        let k = &self.knots;
        let p = &self.probs;
        let last = k.len() - 1;
        let mut out = Vec::with_capacity(xs.len());
        let mut s = 0usize;
        for &x in xs {
            if x <= k[0] {
                out.push(p[0]);
                continue;
            }
            if x >= k[last] {
                out.push(p[last]);
                continue;
            }
            while s + 1 < last && k[s + 1] < x {
                s += 1;
            }
            // k[s] < x <= k[s+1]
            let width = k[s + 1] - k[s];
            let v = if width > T::zero() {
                p[s] + (p[s + 1] - p[s]) * (x - k[s]) / width
            } else {
                p[s + 1]
            };
            out.push(v);
        }
        out
    }
}

/// Dual-cell boundaries of a grid: first node, the midpoints between
/// neighbouring nodes, last node. Cell `i` has length equal to the
/// trapezoid weight of node `i` (before any radial factor).
pub(crate) fn cell_bounds<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let half = T::lit(0.5);
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(nodes[0]);
    for w in nodes.windows(2) {
        bounds.push((w[0] + w[1]) * half);
    }
    bounds.push(nodes[n - 1]);
    bounds
}

impl<T: Real> PiecewiseCdf<T> {
    /// CDF that spreads the mass `w_i mu_i` of each node uniformly over its
    /// dual cell. On a radial grid this is the law of `|x|`.
    pub fn from_cells(mu: &GridDensity<T>) -> Result<Self> {
        let knots = cell_bounds(mu.grid());
        let total = mu.mass();
        if !(total > T::zero()) {
            return Err(Error::ZeroMass);
        }
        let mut probs = Vec::with_capacity(knots.len());
        probs.push(T::zero());
        let mut acc = T::zero();
        for (&w, &v) in mu.grid().weights().iter().zip(mu.values()) {
            acc = acc + w * v;
            probs.push((acc / total).min(T::one()));
        }
        *probs.last_mut().unwrap() = T::one();
        Ok(Self { knots, probs })
    }

    /// Breakpoint levels.
    pub fn levels(&self) -> &[T] {
        &self.probs
    }
}

/// Walks the quantile function of a [`PiecewiseCdf`] over increasing level
/// intervals.
pub(crate) struct QuantileCursor<'a, T> {
    cdf: &'a PiecewiseCdf<T>,
    seg: usize,
}

impl<'a, T: Real> QuantileCursor<'a, T> {
    pub fn new(cdf: &'a PiecewiseCdf<T>) -> Self {
        Self { cdf, seg: 0 }
    }

    /// `(X(lo+), X(hi-))` for `lo < hi` with no breakpoint of this CDF
    /// strictly inside `(lo, hi)`. Calls must have nondecreasing `lo`.
    pub fn segment(&mut self, lo: T, hi: T) -> (T, T) {
        let p = &self.cdf.probs;
        let k = &self.cdf.knots;
        let last = p.len() - 1;
        while self.seg + 1 < last && p[self.seg + 1] <= lo {
            self.seg += 1;
        }
        let s = self.seg;
        let width = p[s + 1] - p[s];
        if !(width > T::zero()) {
            return (k[s + 1], k[s + 1]);
        }
        let at = |q: T| k[s] + (k[s + 1] - k[s]) * ((q - p[s]) / width).max(T::zero()).min(T::one());
        (at(lo), at(hi))
    }
}

/// Sorted union of two breakpoint sets in `[0, 1]`.
pub(crate) fn merge_levels<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last().is_none_or(|&l| next > l) {
            out.push(next);
        }
    }
    out
}

/// Cumulative trapezoid CDF of a line density at the grid nodes, normalised
/// so the last entry is exactly one.
pub fn cumulative_cdf<T: Real>(mu: &GridDensity<T>) -> Result<Vec<T>> {
    let grid = mu.grid();
    if grid.geometry() != Geometry::Line {
        return Err(Error::UnsupportedGeometry(
            "CDF is computed on line grids; use the radial transport path".into(),
        ));
    }
    let v = mu.values();
    let h = grid.spacing();
    let half = T::lit(0.5);
    let mut c = Vec::with_capacity(v.len());
    c.push(T::zero());
    for i in 1..v.len() {
        let prev = c[i - 1];
        c.push(prev + h * half * (v[i - 1] + v[i]));
    }
    let total = *c.last().unwrap();
    if !(total > T::zero()) {
        return Err(Error::ZeroMass);
    }
    Ok(c.into_iter().map(|x| x / total).collect())
}

/// Inverts a nondecreasing CDF tabulated at `knots` by monotone
/// piecewise-linear interpolation at the levels `q_j = (j+1/2)/M`.
pub(crate) fn invert_cdf<T: Real>(knots: &[T], cdf: &[T], m: usize) -> Vec<T> {
    let n = knots.len();
    let mut out = Vec::with_capacity(m);
    let mut i = 0usize;
    for j in 0..m {
        let q = level::<T>(j, m);
        // first segment whose right end reaches q
        while i + 1 < n - 1 && cdf[i + 1] < q {
            i += 1;
        }
        let (c0, c1) = (cdf[i], cdf[i + 1]);
        let x = if c1 > c0 {
            let t = ((q - c0) / (c1 - c0)).max(T::zero()).min(T::one());
            knots[i] + (knots[i + 1] - knots[i]) * t
        } else {
            knots[i + 1]
        };
        out.push(x);
    }
    // guard against rounding producing a decrease
    for j in 1..m {
        if out[j] < out[j - 1] {
            out[j] = out[j - 1];
        }
    }
    out
}

/// CDF by cumulative trapezoid and quantile by monotone piecewise-linear
/// inversion, at `m` quantile levels.
pub fn cdf_and_quantile<T: Real>(mu: &GridDensity<T>, m: usize) -> Result<QuantileRep<T>> {
    if m < MIN_QUANTILE_NODES {
        return Err(Error::InvalidParameter {
            name: "M",
            reason: format!("need at least {MIN_QUANTILE_NODES} quantile nodes, got {m}"),
        });
    }
    let cdf = cumulative_cdf(mu)?;
    QuantileRep::new(invert_cdf(mu.grid().nodes(), &cdf, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Geometry, Grid, GridDensity};
    fn line(a: f64, b: f64, n: usize) -> Grid<f64> {
        Grid::uniform(a, b, n, 1, Geometry::Line).unwrap()
    }

    #[test]
    fn uniform_density_has_identity_quantile() {
        let g = line(0.0, 1.0, 101);
        let mu = GridDensity::from_fn(&g, |_| 1.0).unwrap();
        let q = cdf_and_quantile(&mu, 64).unwrap();
        for (j, &x) in q.values().iter().enumerate() {
            assert!((x - q.level(j)).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_median_is_zero() {
        let g = line(-8.0, 8.0, 2049);
        let mu = GridDensity::from_fn(&g, |x| (-x * x / 2.0).exp()).unwrap();
        let q = cdf_and_quantile(&mu, 1000).unwrap();
        // levels 0.4995 and 0.5005 straddle the median
        let med = 0.5 * (q.values()[499] + q.values()[500]);
        assert!(med.abs() < 1e-6, "{med}");
    }

    #[test]
    fn translation_shifts_quantiles() {
        let g = line(-12.0, 12.0, 2401);
        let c = 1.25;
        let mu = GridDensity::from_fn(&g, |x| (-x * x / 2.0).exp()).unwrap();
        let nu = GridDensity::from_fn(&g, |x| (-(x - c) * (x - c) / 2.0).exp()).unwrap();
        let qm = cdf_and_quantile(&mu, 500).unwrap();
        let qn = cdf_and_quantile(&nu, 500).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in qm.values().iter().zip(qn.values()) {
            // grid shift is an integer number of cells: 1.25 = 125 h
            worst = worst.max((b - a - c).abs());
        }
        assert!(worst < 1e-9);
    }

    #[test]
    fn rejects_radial_and_small_m() {
        let g = Grid::<f64>::uniform(0.0, 1.0, 11, 3, Geometry::Radial).unwrap();
        let mu = GridDensity::from_fn(&g, |_| 1.0).unwrap();
        assert!(cdf_and_quantile(&mu, 16).is_err());
        let g = line(0.0, 1.0, 11);
        let mu = GridDensity::from_fn(&g, |_| 1.0).unwrap();
        assert!(cdf_and_quantile(&mu, 4).is_err());
    }

    #[test]
    fn round_trip_recovers_density() {
        let g = line(-8.0, 8.0, 801);
        let mu = GridDensity::from_fn(&g, |x| {
            (-(x - 1.0) * (x - 1.0) / 2.0).exp() + 0.5 * (-(x + 2.0) * (x + 2.0)).exp()
        })
        .unwrap();
        let mut prev = f64::INFINITY;
        for m in [200, 800, 3200] {
            let back = cdf_and_quantile(&mu, m).unwrap().to_density(&g).unwrap();
            let err = back.l1_distance(&mu).unwrap();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 5e-3, "{prev}");
    }
}
