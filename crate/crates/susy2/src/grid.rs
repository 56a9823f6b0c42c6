//! Uniform grids and complex-valued grid functions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SusyError};

/// A uniform grid on `[x0, x1]` with an odd number of nodes, so the midpoint
/// of a symmetric interval is always a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, n: usize) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite()) || x0 >= x1 {
            return Err(SusyError::InvalidInput(format!(
                "grid endpoints must be finite with x0 < x1, got [{x0}, {x1}]"
            )));
        }
        if n < 3 || n % 2 == 0 {
            return Err(SusyError::InvalidInput(format!(
                "grid needs an odd node count >= 3, got {n}"
            )));
        }
        Ok(Grid { x0, x1, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.x1 - self.x0) / (self.n - 1) as f64
    }

    /// Node position. Computed as a convex combination so that on a
    /// symmetric interval `node(n-1-i) == -node(i)` exactly.
    pub fn node(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        (self.x0 * (m - i as f64) + self.x1 * i as f64) / m
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// True if the grid is symmetric about the origin.
    pub fn is_symmetric(&self) -> bool {
        (self.x0 + self.x1).abs() <= 1e-12 * (self.x1 - self.x0)
    }

    /// Index of the node closest to `x`, if within a small fraction of the
    /// spacing.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let h = self.spacing();
        let i = ((x - self.x0) / h).round();
        if i < 0.0 || i > (self.n - 1) as f64 {
            return None;
        }
        let i = i as usize;
        if (self.node(i) - x).abs() <= 1e-9 * (1.0 + h) {
            Some(i)
        } else {
            None
        }
    }
}

/// Complex energy (eigenvalue parameter, factorization constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy(pub C64);

impl Energy {
    pub fn new(re: f64, im: f64) -> Self {
        Energy(C64::new(re, im))
    }
    pub fn re(&self) -> f64 {
        self.0.re
    }
    pub fn im(&self) -> f64 {
        self.0.im
    }
    pub fn is_real(&self, tol: f64) -> bool {
        self.0.im.abs() <= tol * (1.0 + self.0.norm())
    }
}

impl From<C64> for Energy {
    fn from(z: C64) -> Self {
        Energy(z)
    }
}

impl From<f64> for Energy {
    fn from(x: f64) -> Self {
        Energy(C64::new(x, 0.0))
    }
}

impl Serialize for Energy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Energy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Energy(C64::new(re, im)))
    }
}

/// A complex-valued function sampled on a grid together with its first
/// derivative. The derivative is always analytic or co-evolved by the
/// integrator, never a finite difference of `values`.
///
/// Nodes where the function is undefined (e.g. inside a guard band around a
/// zero of an intermediate transformation function) hold NaN in `values`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub derivs: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>, derivs: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n || derivs.len() != grid.n {
            return Err(SusyError::InvalidInput(format!(
                "grid function needs {} samples, got {} values / {} derivs",
                grid.n,
                values.len(),
                derivs.len()
            )));
        }
        Ok(GridFunction { grid, values, derivs })
    }

    /// Build from a closure returning `(value, derivative)` at each node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> (C64, C64)) -> Self {
        let mut values = Vec::with_capacity(grid.n);
        let mut derivs = Vec::with_capacity(grid.n);
        for x in grid.nodes() {
            let (v, d) = f(x);
            values.push(v);
            derivs.push(d);
        }
        GridFunction { grid, values, derivs }
    }

    pub fn zero(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.n],
            derivs: vec![C64::new(0.0, 0.0); grid.n],
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Largest finite |value| over the grid.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .filter(|m| m.is_finite())
            .fold(0.0, f64::max)
    }

    /// Indices of nodes flagged as undefined.
    pub fn flagged_nodes(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !(v.re.is_finite() && v.im.is_finite()))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(SusyError::GridMismatch(format!(
                "[{}, {}] n={} vs [{}, {}] n={}",
                self.grid.x0, self.grid.x1, self.grid.n, other.grid.x0, other.grid.x1, other.grid.n
            )));
        }
        Ok(())
    }

    /// Cubic (4-point Lagrange) interpolation of the values at an arbitrary
    /// abscissa. Fails on flagged nodes inside the stencil.
    pub fn interp(&self, x: f64) -> Result<C64> {
        let g = &self.grid;
        let h = g.spacing();
        if x < g.x0 - 1e-9 * h || x > g.x1 + 1e-9 * h {
            return Err(SusyError::ResampleError(format!(
                "x = {x} outside [{}, {}]",
                g.x0, g.x1
            )));
        }
        let t = ((x - g.x0) / h).floor();
        let j = (t as isize).clamp(0, g.n as isize - 2) as usize;
        let j0 = j.saturating_sub(1).min(g.n - 4);
        let s = (x - g.node(j0)) / h; // in [0, 3] over the stencil
        let mut acc = C64::new(0.0, 0.0);
        for (k, node) in (0..4).map(|k| (k, j0 + k)) {
            let v = self.values[node];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(SusyError::ResampleError(format!(
                    "flagged node at x = {} inside interpolation stencil",
                    g.node(node)
                )));
            }
            let mut w = 1.0;
            for m in 0..4 {
                if m != k {
                    w *= (s - m as f64) / (k as f64 - m as f64);
                }
            }
            acc += v * w;
        }
        Ok(acc)
    }
}

/// Cumulative integral of `f` anchored at node `i0`: out[i] = ∫ from
/// x_{i0} to x_i. Both directions accumulate outward from the anchor, so
/// values near the anchor never suffer cancellation against a large total;
/// for an even integrand on a symmetric grid the result is exactly odd.
pub fn cumulative_integral_from(f: &[C64], h: f64, i0: usize) -> Vec<C64> {
    let n = f.len();
    assert!(i0 < n, "anchor index out of range");
    let mut out = vec![C64::new(0.0, 0.0); n];
    let fwd = cumulative_integral(&f[i0..], h);
    for (j, v) in fwd.into_iter().enumerate() {
        out[i0 + j] = v;
    }
    if i0 > 0 {
        let rev: Vec<C64> = f[..=i0].iter().rev().cloned().collect();
        let bwd = cumulative_integral(&rev, h);
        for (j, v) in bwd.into_iter().enumerate() {
            out[i0 - j] = -v;
        }
    }
    out
}

/// Cumulative integral of `f` from node 0, by composite Simpson on even
/// prefixes and a one-sided cubic rule for the odd half-panels.
pub fn cumulative_integral(f: &[C64], h: f64) -> Vec<C64> {
    let n = f.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 2 {
        return out;
    }
    // Even indices: composite Simpson.
    let mut acc = C64::new(0.0, 0.0);
    let mut k = 0;
    while k + 2 < n {
        acc += (f[k] + f[k + 1] * 4.0 + f[k + 2]) * (h / 3.0);
        out[k + 2] = acc;
        k += 2;
    }
    // Odd indices: previous even node plus a single-interval cubic rule.
    for i in (1..n).step_by(2) {
        let step = if i + 2 < n {
            (f[i - 1] * 9.0 + f[i] * 19.0 - f[i + 1] * 5.0 + f[i + 2]) * (h / 24.0)
        } else {
            // Backward stencil at the right edge.
            (f[i] * 9.0 + f[i - 1] * 19.0 - f[i - 2] * 5.0 + f[i - 3]) * (h / 24.0)
        };
        out[i] = out[i - 1] + step;
    }
    out
}

/// Relative residual of the Schrödinger equation `-u'' + (V - E) u = 0`
/// checked with the 5-point second-difference stencil over interior nodes.
/// Nodes adjacent to flagged entries are skipped.
pub fn schrodinger_residual(u: &GridFunction, v: &GridFunction, energy: Energy) -> Result<f64> {
    let (r, _) = schrodinger_residual_capped(u, v, energy, None)?;
    Ok(r)
}

/// As [`schrodinger_residual`], but skipping stencil windows that contain a
/// node with |V| above `cap`: there the 5-point stencil cannot certify
/// anything at the grid's resolution. Returns the residual together with
/// the number of interior nodes excluded by the cap.
pub fn schrodinger_residual_capped(
    u: &GridFunction,
    v: &GridFunction,
    energy: Energy,
    cap: Option<f64>,
) -> Result<(f64, usize)> {
    u.same_grid(v)?;
    let n = u.n();
    if n < 5 {
        return Err(SusyError::InvalidInput("residual stencil needs n >= 5".into()));
    }
    let h2 = u.grid.spacing().powi(2);
    let fin = |z: C64| z.re.is_finite() && z.im.is_finite();
    let vcap = cap.unwrap_or(f64::INFINITY);
    let mut worst = 0.0f64;
    let mut masked = 0usize;
    for i in 2..n - 2 {
        let window_ok = (i - 2..=i + 2).all(|j| fin(u.values[j]) && fin(v.values[j]));
        if !window_ok {
            continue;
        }
        if (i - 2..=i + 2).any(|j| v.values[j].norm() > vcap) {
            masked += 1;
            continue;
        }
        let d2 = (-u.values[i - 2] + u.values[i - 1] * 16.0 - u.values[i] * 30.0
            + u.values[i + 1] * 16.0
            - u.values[i + 2])
            / (12.0 * h2);
        let r = (-d2 + (v.values[i] - energy.0) * u.values[i]).norm() / (1.0 + u.values[i].norm());
        worst = worst.max(r);
    }
    Ok((worst, masked))
}

/// Largest |V| a 5-point stencil on spacing `h` can certify to residual
/// `tol`: the stencil truncation error scales like `h⁴ |V|³`, so windows
/// containing larger values are excluded from residual checks.
pub fn stencil_resolution_cap(h: f64, tol: f64) -> f64 {
    (tol / h.powi(4)).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_nodes_mirror_exactly() {
        let g = Grid::new(-PI, PI, 4097).unwrap();
        for i in 0..g.n {
            assert_eq!(g.node(i), -g.node(g.n - 1 - i));
        }
        assert_eq!(g.node(g.n / 2), 0.0);
        assert!(g.is_symmetric());
    }

    #[test]
    fn grid_rejects_even_or_tiny() {
        assert!(Grid::new(0.0, 1.0, 4).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        assert!(Grid::new(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn cumulative_integral_matches_sin_squared() {
        // int_0^x sin^2(k y) dy = x/2 - sin(2 k x) / (4 k)
        let k = 1.7;
        let g = Grid::new(0.0, 8.0, 2001).unwrap();
        let f: Vec<C64> = g.nodes().map(|x| C64::new((k * x).sin().powi(2), 0.0)).collect();
        let cum = cumulative_integral(&f, g.spacing());
        for (i, x) in g.nodes().enumerate() {
            let exact = x / 2.0 - (2.0 * k * x).sin() / (4.0 * k);
            assert!(
                (cum[i].re - exact).abs() < 1e-10,
                "node {i}: {} vs {exact}",
                cum[i].re
            );
            assert!(cum[i].im.abs() < 1e-14);
        }
    }

    #[test]
    fn interp_reproduces_cubic() {
        let g = Grid::new(0.0, 2.0, 21).unwrap();
        let f = GridFunction::from_fn(g, |x| {
            (C64::new(x * x * x - x, 0.0), C64::new(3.0 * x * x - 1.0, 0.0))
        });
        for &x in &[0.05, 0.333, 1.111, 1.95] {
            let v = f.interp(x).unwrap();
            assert!((v.re - (x * x * x - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_detects_wrong_energy() {
        let g = Grid::new(-PI, PI, 801).unwrap();
        let u = GridFunction::from_fn(g, |x| (C64::new(x.sin(), 0.0), C64::new(x.cos(), 0.0)));
        let v = GridFunction::zero(g);
        let ok = schrodinger_residual(&u, &v, Energy::new(1.0, 0.0)).unwrap();
        let bad = schrodinger_residual(&u, &v, Energy::new(1.5, 0.0)).unwrap();
        assert!(ok < 1e-6, "residual {ok}");
        assert!(bad > 1e-2, "residual {bad}");
    }
}
