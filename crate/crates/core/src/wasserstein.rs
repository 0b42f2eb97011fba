//! One-dimensional optimal transport and Otto calculus on grids.
//!
//! Densities are read as piecewise-uniform measures: the mass `w_i mu_i` of
//! node `i` is spread evenly over its dual cell. Their quantile functions
//! are then piecewise linear, so the quadratic transport cost
//! `int_0^1 |X_mu(q) - X_nu(q)|^2 dq` is integrated exactly over the merged
//! breakpoints, and McCann interpolation is linear interpolation of the
//! quantile functions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{Geometry, Grid, GridDensity, TangentField};
use crate::quantile::{cell_bounds, merge_levels, PiecewiseCdf, QuantileCursor, QuantileRep};
use crate::scalar::Real;
use crate::trajectory::Trajectory;

fn require_line<T: Real>(grid: &Grid<T>, what: &str) -> Result<()> {
    if grid.geometry() != Geometry::Line {
        return Err(Error::UnsupportedGeometry(format!(
            "{what} works on line grids; use w2_radial for radial profiles"
        )));
    }
    Ok(())
}

/// `int_0^1 (X_a - X_b)^2 dq`, exact for piecewise-linear quantiles.
fn quantile_cost<T: Real>(a: &PiecewiseCdf<T>, b: &PiecewiseCdf<T>) -> T {
    let levels = merge_levels(a.levels(), b.levels());
    let mut ca = QuantileCursor::new(a);
    let mut cb = QuantileCursor::new(b);
    let third = T::one() / T::lit(3.0);
    let mut sum = T::zero();
    for w in levels.windows(2) {
        let (a0, a1) = ca.segment(w[0], w[1]);
        let (b0, b1) = cb.segment(w[0], w[1]);
        let d0 = a0 - b0;
        let d1 = a1 - b1;
        sum = sum + (w[1] - w[0]) * (d0 * d0 + d0 * d1 + d1 * d1) * third;
    }
    sum
}

/// Squared distance between two line densities.
pub fn w2_squared_1d<T: Real>(mu: &GridDensity<T>, nu: &GridDensity<T>) -> Result<T> {
    require_line(mu.grid(), "w2_1d")?;
    require_line(nu.grid(), "w2_1d")?;
    Ok(quantile_cost(
        &PiecewiseCdf::from_cells(mu)?,
        &PiecewiseCdf::from_cells(nu)?,
    ))
}

/// Quadratic Wasserstein distance between two line densities: the `L^2`
/// distance between their quantile functions. Symmetric in its arguments
/// bit for bit.
pub fn w2_1d<T: Real>(mu: &GridDensity<T>, nu: &GridDensity<T>) -> Result<T> {
    Ok(w2_squared_1d(mu, nu)?.sqrt())
}

/// Distance between two radial densities in `R^n`, computed as the
/// one-dimensional transport of the laws of `|x|`. Radially symmetric
/// measures are coupled optimally by radial maps, so this is the full
/// distance for them.
pub fn w2_radial<T: Real>(mu: &GridDensity<T>, nu: &GridDensity<T>) -> Result<T> {
    for g in [mu.grid(), nu.grid()] {
        if g.geometry() != Geometry::Radial {
            return Err(Error::UnsupportedGeometry("w2_radial needs radial grids".into()));
        }
    }
    if mu.grid().dim() != nu.grid().dim() {
        return Err(Error::GridMismatch);
    }
    Ok(quantile_cost(&PiecewiseCdf::from_cells(mu)?, &PiecewiseCdf::from_cells(nu)?).sqrt())
}

/// Distance between two quantile representations at the same levels
/// (midpoint rule in `q`).
pub fn w2_quantile<T: Real>(a: &QuantileRep<T>, b: &QuantileRep<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let s: T = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    Ok((s * a.dq()).sqrt())
}

/// Distance between two empirical measures with equally weighted atoms:
/// the cost of the monotone (sorted) pairing.
pub fn w2_atoms<T: Real>(xs: &[T], ys: &[T]) -> Result<T> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).expect("finite atoms"));
    b.sort_by(|p, q| p.partial_cmp(q).expect("finite atoms"));
    let s: T = a.iter().zip(&b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    Ok((s / T::from_usize_lossy(xs.len())).sqrt())
}

/// Face fluxes `J_{i+1/2}` (`n - 1` values) that carry `before` to `after`
/// in time `dt` through the dual cells. Each is computed from the side of
/// the face holding less mass, which keeps tail fluxes accurate.
fn face_fluxes<T: Real>(before: &GridDensity<T>, after: &GridDensity<T>, dt: T) -> Vec<T> {
    let w = before.grid().weights();
    let b = before.values();
    let a = after.values();
    let n = w.len();
    let mut left_change = vec![T::zero(); n];
    let mut left_mass = vec![T::zero(); n];
    let (mut c, mut m) = (T::zero(), T::zero());
    for i in 0..n {
        c = c + w[i] * (a[i] - b[i]);
        m = m + w[i] * (a[i] + b[i]);
        left_change[i] = c;
        left_mass[i] = m;
    }
    let mut right_change = vec![T::zero(); n];
    let mut right_mass = vec![T::zero(); n];
    let (mut c, mut m) = (T::zero(), T::zero());
    for i in (1..n).rev() {
        c = c + w[i] * (a[i] - b[i]);
        m = m + w[i] * (a[i] + b[i]);
        right_change[i - 1] = c;
        right_mass[i - 1] = m;
    }
    (0..n - 1)
        .map(|i| {
            if left_mass[i] <= right_mass[i] {
                -left_change[i] / dt
            } else {
                right_change[i] / dt
            }
        })
        .collect()
}

/// Velocity `grad Phi` solving the continuity equation between two
/// consecutive snapshots, evaluated at the midpoint time against the
/// averaged density: `grad Phi = -(d/dt CDF) / mu`.
///
/// Nodes where the averaged density vanishes get zero velocity unless mass
/// flows through them, which is an error.
pub fn continuity_velocity<T: Real>(before: &GridDensity<T>, after: &GridDensity<T>, dt: T) -> Result<TangentField<T>> {
    require_line(before.grid(), "continuity_velocity")?;
    before.grid().ensure_same(after.grid())?;
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("time step must be positive, got {dt}"),
        });
    }
    let flux = face_fluxes(before, after, dt);
    let n = before.len();
    let half = T::lit(0.5);
    let floor = crate::scalar::density_floor::<T>();
    let peak_flux = flux.iter().fold(T::zero(), |m, &f| m.max(f.abs()));
    let mut v = vec![T::zero(); n];
    for i in 0..n {
        let jl = if i > 0 { flux[i - 1] } else { T::zero() };
        let jr = if i + 1 < n { flux[i] } else { T::zero() };
        let rho = half * (before.values()[i] + after.values()[i]);
        let j = half * (jl + jr);
        if rho > floor {
            v[i] = j / rho;
        } else if j.abs() > T::lit(1e-14) * peak_flux {
            return Err(Error::VelocityUndefined { index: i });
        }
    }
    TangentField::new(before.grid().clone(), v)
}

/// `<grad Phi, grad Psi>_mu = int grad Phi . grad Psi dmu`.
pub fn otto_inner<T: Real>(mu: &GridDensity<T>, phi: &TangentField<T>, psi: &TangentField<T>) -> Result<T> {
    mu.grid().ensure_same(phi.grid())?;
    mu.grid().ensure_same(psi.grid())?;
    let prod: Vec<T> = phi.values().iter().zip(psi.values()).map(|(&a, &b)| a * b).collect();
    mu.expect_samples(&prod)
}

/// CDF of the McCann interpolant at time `s`: quantile
/// `(1 - s) X_mu + s X_nu` on the merged breakpoints.
fn geodesic_cdf<T: Real>(a: &PiecewiseCdf<T>, b: &PiecewiseCdf<T>, s: T) -> PiecewiseCdf<T> {
    let levels = merge_levels(a.levels(), b.levels());
    let mut ca = QuantileCursor::new(a);
    let mut cb = QuantileCursor::new(b);
    let r = T::one() - s;
    let mut knots = Vec::with_capacity(2 * levels.len());
    let mut probs = Vec::with_capacity(2 * levels.len());
    for w in levels.windows(2) {
        let (a0, a1) = ca.segment(w[0], w[1]);
        let (b0, b1) = cb.segment(w[0], w[1]);
        knots.push(r * a0 + s * b0);
        probs.push(w[0]);
        knots.push(r * a1 + s * b1);
        probs.push(w[1]);
    }
    // rounding can reorder coincident knots by an ulp
    for i in 1..knots.len() {
        if knots[i] < knots[i - 1] {
            knots[i] = knots[i - 1];
        }
    }
    PiecewiseCdf { knots, probs }
}

/// Normalised cumulative mass from the left and from the right at the
/// nodes, for the piecewise-linear interpolant of the density.
fn two_sided_cdf<T: Real>(mu: &GridDensity<T>) -> (Vec<T>, Vec<T>) {
    let v = mu.values();
    let n = v.len();
    let h = mu.grid().spacing();
    let half = T::lit(0.5);
    let total = mu.mass();
    let mut left = vec![T::zero(); n];
    let mut right = vec![T::zero(); n];
    for i in 1..n {
        left[i] = left[i - 1] + h * half * (v[i - 1] + v[i]);
    }
    for i in (0..n - 1).rev() {
        right[i] = right[i + 1] + h * half * (v[i] + v[i + 1]);
    }
    for x in left.iter_mut().chain(right.iter_mut()) {
        *x = *x / total;
    }
    (left, right)
}

/// Solves `h (a t + (b - a) t^2 / 2) = c` for `t` in `[0, 1]`: the position
/// of cumulative mass `c` inside a cell whose density runs linearly from
/// `a` to `b`.
fn cell_position<T: Real>(a: T, b: T, c: T, h: T) -> T {
    let c = c / h;
    let disc = (a * a + T::lit(2.0) * (b - a) * c).max(T::zero());
    let denom = a + disc.sqrt();
    if denom > T::zero() {
        (T::lit(2.0) * c / denom).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Cubic through four points, evaluated at `x`.
fn lagrange4<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    let mut out = T::zero();
    for i in 0..4 {
        let mut l = T::one();
        for j in 0..4 {
            if i != j {
                l = l * (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        out = out + l * ys[i];
    }
    out
}

/// Four-point stencil start around interval `k` of `n` points.
fn stencil(k: usize, n: usize) -> usize {
    k.saturating_sub(1).min(n.saturating_sub(4))
}

/// Monotone map `X_nu o F_mu` at the nodes, with mass fractions below one
/// half measured from the left and the rest from the right so neither tail
/// loses precision. Also returns `nu` at the image points.
fn monotone_map<T: Real>(mu: &GridDensity<T>, nu: &GridDensity<T>) -> (Vec<T>, Vec<T>) {
    let x = mu.grid().nodes();
    let h = mu.grid().spacing();
    let n = x.len();
    let (lm, rm) = two_sided_cdf(mu);
    let (ln, rn) = two_sided_cdf(nu);
    let scale = T::one() / nu.mass();
    let nv: Vec<T> = nu.values().iter().map(|&v| v * scale).collect();
    let log_nv: Vec<T> = nv.iter().map(|v| v.ln()).collect();
    // log nu is smooth where nu is: interpolate it with a cubic
    let log_nu_at = |y: T, cell: usize| {
        let st = stencil(cell, n);
        lagrange4(&x[st..st + 4], &log_nv[st..st + 4], y).exp()
    };
    let half = T::lit(0.5);
    let mut image = vec![T::zero(); n];
    let mut density = vec![T::zero(); n];
    let mut j = 0usize;
    for i in 0..n {
        if lm[i] <= half {
            let q = lm[i];
            while j + 2 < n && ln[j + 1] < q {
                j += 1;
            }
            let t = cell_position(nv[j], nv[j + 1], q - ln[j], h);
            image[i] = x[j] + t * h;
            density[i] = log_nu_at(image[i], j);
        } else {
            let q = rm[i];
            // cell [x_j, x_{j+1}] with rn[j + 1] <= q <= rn[j]
            while j + 2 < n && rn[j + 1] > q {
                j += 1;
            }
            let t = cell_position(nv[j + 1], nv[j], q - rn[j + 1], h);
            image[i] = x[j + 1] - t * h;
            density[i] = log_nu_at(image[i], j);
        }
    }
    for i in 1..n {
        if image[i] < image[i - 1] {
            image[i] = image[i - 1];
        }
    }
    (image, density)
}

/// McCann interpolant between two densities on the same line grid: the
/// law whose quantile function is `(1 - s) X_mu + s X_nu`.
///
/// For positive inputs the interpolant is the pushforward of `mu` under
/// `T_s = (1 - s) id + s X_nu o F_mu`, evaluated through
/// `mu_s(T_s(x)) = mu(x) / T_s'(x)` at the nodes and interpolated back to
/// the grid by cubic interpolation of the log-density (exact when
/// `log mu_s` is quadratic, as for Gaussians); `s = 0` and `s = 1` return the inputs. When
/// either density vanishes somewhere the interpolated quantile is binned
/// into the dual cells instead.
pub fn mccann_geodesic<T: Real>(mu: &GridDensity<T>, nu: &GridDensity<T>, s: T) -> Result<GridDensity<T>> {
    require_line(mu.grid(), "mccann_geodesic")?;
    mu.grid().ensure_same(nu.grid())?;
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("interpolation time must lie in [0, 1], got {s}"),
        });
    }
    let grid = mu.grid();
    if s == T::zero() {
        return crate::grid::normalize(mu.values(), grid);
    }
    if s == T::one() {
        return crate::grid::normalize(nu.values(), grid);
    }
    let positive = |d: &GridDensity<T>| d.values().iter().all(|&v| v > T::zero());
    if !(positive(mu) && positive(nu)) {
        let cdf = geodesic_cdf(&PiecewiseCdf::from_cells(mu)?, &PiecewiseCdf::from_cells(nu)?, s);
        let c = cdf.eval_sorted(&cell_bounds(grid));
        let values: Vec<T> = (0..grid.len())
            .map(|i| (c[i + 1] - c[i]).max(T::zero()) / grid.weights()[i])
            .collect();
        return GridDensity::from_values(grid.clone(), values);
    }
    let x = grid.nodes();
    let n = x.len();
    let (image, nu_at_image) = monotone_map(mu, nu);
    let r = T::one() - s;
    let m = mu.mass();
    let mut ys = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    for i in 0..n {
        let mi = mu.values()[i] / m;
        let stretch = r + s * mi / nu_at_image[i];
        ys.push(r * x[i] + s * image[i]);
        logs.push(mi.ln() - stretch.ln());
    }
    let mut values = vec![T::zero(); n];
    let mut k = 0usize;
    for (j, &y) in x.iter().enumerate() {
        if y < ys[0] || y > ys[n - 1] {
            continue;
        }
        while k + 2 < n && ys[k + 1] < y {
            k += 1;
        }
        let st = stencil(k, n);
        let distinct = ys[st..st + 4].windows(2).all(|w| w[1] > w[0]);
        values[j] = if distinct {
            lagrange4(&ys[st..st + 4], &logs[st..st + 4], y).exp()
        } else {
            let width = ys[k + 1] - ys[k];
            let t = if width > T::zero() {
                ((y - ys[k]) / width).max(T::zero()).min(T::one())
            } else {
                T::zero()
            };
            (logs[k] + t * (logs[k + 1] - logs[k])).exp()
        };
    }
    crate::grid::normalize(&values, grid)
}

/// The geodesic sampled at `s = k / steps`, `k = 0..=steps`, as a path on
/// `[0, 1]`.
pub fn mccann_path<T: Real>(
    mu: &GridDensity<T>,
    nu: &GridDensity<T>,
    steps: usize,
) -> Result<Trajectory<T, GridDensity<T>>> {
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            reason: "need at least one step".into(),
        });
    }
    let ds = T::one() / T::from_usize_lossy(steps);
    let mut path = Trajectory::new(mccann_geodesic(mu, nu, T::zero())?, "mccann", ds);
    for k in 1..=steps {
        let s = if k == steps {
            T::one()
        } else {
            T::from_usize_lossy(k) * ds
        };
        path.push(s, mccann_geodesic(mu, nu, s)?);
    }
    Ok(path)
}

/// Uniform step of a path on `[0, 1]`.
fn path_step<T: Real>(path: &Trajectory<T, GridDensity<T>>) -> Result<T> {
    if path.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: path.len(),
        });
    }
    let t = path.times();
    let dt = t[1] - t[0];
    let tol = T::lit(1e-9);
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol * dt) {
        return Err(Error::InvalidParameter {
            name: "path",
            reason: "snapshots must be equally spaced in time".into(),
        });
    }
    if (*path.last().0 - T::one()).abs() > tol {
        return Err(Error::InvalidParameter {
            name: "path",
            reason: format!("path must end at t = 1, ends at {}", path.last().0),
        });
    }
    Ok(dt)
}

/// Fails unless the path starts at `mu` and ends at `nu` within `tol` in
/// `L^1`.
pub fn check_endpoints<T: Real>(
    path: &Trajectory<T, GridDensity<T>>,
    mu: &GridDensity<T>,
    nu: &GridDensity<T>,
    tol: T,
) -> Result<()> {
    let start = path.states()[0].l1_distance(mu)?;
    let end = path.last().1.l1_distance(nu)?;
    if start > tol || end > tol {
        return Err(Error::InvalidParameter {
            name: "path",
            reason: format!(
                "endpoints off by {:e} (start) and {:e} (end) in L1",
                start.to_f64_lossy(),
                end.to_f64_lossy()
            ),
        });
    }
    Ok(())
}

/// Benamou-Brenier action `sum_k dt int |v_k|^2 dmu_{k+1/2}` with `v_k`
/// from [`continuity_velocity`] between consecutive snapshots.
pub fn path_action<T: Real>(path: &Trajectory<T, GridDensity<T>>) -> Result<T> {
    let dt = path_step(path)?;
    let half = T::lit(0.5);
    let mut total = T::zero();
    for w in path.states().windows(2) {
        let v = continuity_velocity(&w[0], &w[1], dt)?;
        let sq: Vec<T> = v
            .values()
            .iter()
            .zip(w[0].values().iter().zip(w[1].values()))
            .map(|(&vi, (&b, &a))| vi * vi * half * (a + b))
            .collect();
        total = total + w[0].grid().integrate(&sq)? * dt;
    }
    Ok(total)
}

/// Fraction of mass in each tail excluded from the residual maximum.
pub const HJ_TAIL_MASS: f64 = 1e-3;

/// Residual of the geodesic system `d/ds Phi + |grad Phi|^2 / 2 = 0`
/// along a path.
///
/// `Phi` is recovered from the reconstructed velocity by cumulative
/// quadrature. Potentials are only defined up to functions of time, so at
/// each interior snapshot the residual has its `mu`-weighted mean removed
/// before the maximum is taken over the nodes that carry the bulk of the
/// mass (tails of mass [`HJ_TAIL_MASS`] on each side are excluded).
pub fn geodesic_hj_residual<T: Real>(path: &Trajectory<T, GridDensity<T>>) -> Result<T> {
    let dt = path_step(path)?;
    if path.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: path.len(),
        });
    }
    let states = path.states();
    let grid = states[0].grid().clone();
    let h = grid.spacing();
    let half = T::lit(0.5);
    let mut velocities = Vec::with_capacity(states.len() - 1);
    let mut potentials = Vec::with_capacity(states.len() - 1);
    for w in states.windows(2) {
        let v = continuity_velocity(&w[0], &w[1], dt)?.into_values();
        let mut phi = vec![T::zero(); v.len()];
        for i in 1..v.len() {
            phi[i] = phi[i - 1] + h * half * (v[i - 1] + v[i]);
        }
        velocities.push(v);
        potentials.push(phi);
    }
    let tail = T::lit(HJ_TAIL_MASS);
    let mut worst = T::zero();
    for k in 1..states.len() - 1 {
        let mu = &states[k];
        let r: Vec<T> = (0..grid.len())
            .map(|i| {
                let ds_phi = (potentials[k][i] - potentials[k - 1][i]) / dt;
                let g = half * (velocities[k - 1][i] + velocities[k][i]);
                ds_phi + half * g * g
            })
            .collect();
        let mean = mu.expect_samples(&r)? / mu.mass();
        let cdf = PiecewiseCdf::from_cells(mu)?;
        let p = cdf.levels();
        for i in 0..grid.len() {
            // cell i spans levels p[i]..p[i+1]
            if p[i + 1] > tail && p[i] < T::one() - tail {
                worst = worst.max((r[i] - mean).abs());
            }
        }
    }
    Ok(worst)
}

/// Writes geodesic snapshots in long format `s,x,value`.
pub fn write_geodesic_csv<T: Real, W: Write>(path: &Trajectory<T, GridDensity<T>>, mut out: W) -> Result<()> {
    writeln!(out, "s,x,value")?;
    for (&s, mu) in path.iter() {
        for (&x, &v) in mu.grid().nodes().iter().zip(mu.values()) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                s.to_f64_lossy(),
                x.to_f64_lossy(),
                v.to_f64_lossy()
            )?;
        }
    }
    Ok(())
}
