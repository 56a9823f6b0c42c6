//! Fixed-step RK4 integration of the Schrödinger equation at complex energy.
//!
//! The fixed step keeps every produced solution aligned with the potential's
//! grid, which is what the Wronskian arithmetic downstream relies on.

use num_complex::Complex64 as C64;

use crate::error::{Result, SusyError};
use crate::grid::{Energy, GridFunction};

/// Magnitude cap signalling exponential blow-up. Far below f64 overflow,
/// far above any desk-scale solution.
pub const OVERFLOW_CAP: f64 = 1e150;

/// Integrate `-u'' + V u = E u` bidirectionally from a grid node, with
/// `u(x_start) = u0`, `u'(x_start) = du0`.
///
/// The derivative samples of the result are the co-evolved RK4 derivative,
/// not a finite difference. Fails with `Overflow` if |u| or |u'| exceeds
/// [`OVERFLOW_CAP`].
pub fn solve_ivp(
    v: &GridFunction,
    energy: Energy,
    x_start: f64,
    u0: C64,
    du0: C64,
) -> Result<GridFunction> {
    let grid = v.grid;
    let i0 = grid.index_of(x_start).ok_or_else(|| {
        SusyError::InvalidInput(format!("x_start = {x_start} is not a node of the grid"))
    })?;
    let n = grid.n;
    let h = grid.spacing();
    // V at the half-steps, by 4-point interpolation.
    let vmid = midpoints(&v.values);

    let mut values = vec![C64::new(0.0, 0.0); n];
    let mut derivs = vec![C64::new(0.0, 0.0); n];
    values[i0] = u0;
    derivs[i0] = du0;

    // March right then left; the step routine is direction-agnostic.
    let mut state = (u0, du0);
    for i in i0..n - 1 {
        state = rk4_step(state, v.values[i], vmid[i], v.values[i + 1], energy.0, h);
        check_overflow(state, grid.node(i + 1))?;
        values[i + 1] = state.0;
        derivs[i + 1] = state.1;
    }
    state = (u0, du0);
    for i in (1..=i0).rev() {
        state = rk4_step(state, v.values[i], vmid[i - 1], v.values[i - 1], energy.0, -h);
        check_overflow(state, grid.node(i - 1))?;
        values[i - 1] = state.0;
        derivs[i - 1] = state.1;
    }

    GridFunction::new(grid, values, derivs)
}

fn check_overflow(state: (C64, C64), x: f64) -> Result<()> {
    if state.0.norm() > OVERFLOW_CAP || state.1.norm() > OVERFLOW_CAP {
        return Err(SusyError::Overflow { x, cap: OVERFLOW_CAP });
    }
    Ok(())
}

/// One RK4 step of the first-order system (u, u') with u'' = (V - E) u.
#[inline]
fn rk4_step(
    (u, p): (C64, C64),
    v_here: C64,
    v_mid: C64,
    v_there: C64,
    e: C64,
    h: f64,
) -> (C64, C64) {
    let f = |u: C64, p: C64, v: C64| (p, (v - e) * u);

    let (k1u, k1p) = f(u, p, v_here);
    let (k2u, k2p) = f(u + k1u * (h / 2.0), p + k1p * (h / 2.0), v_mid);
    let (k3u, k3p) = f(u + k2u * (h / 2.0), p + k2p * (h / 2.0), v_mid);
    let (k4u, k4p) = f(u + k3u * h, p + k3p * h, v_there);

    (
        u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0),
        p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0),
    )
}

/// Midpoint values between consecutive nodes by cubic interpolation,
/// one-sided at the edges. Exact for cubics, so RK4 keeps its order.
pub(crate) fn midpoints(v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let m = if i == 0 {
            // nodes 0..3, midpoint at t = 0.5
            interp4(v[0], v[1], v[2], v[3], 0.5)
        } else if i >= n - 2 {
            interp4(v[n - 4], v[n - 3], v[n - 2], v[n - 1], (i - (n - 4)) as f64 + 0.5)
        } else {
            // centred: nodes i-1..i+2, midpoint at t = 1.5
            interp4(v[i - 1], v[i], v[i + 1], v[i + 2], 1.5)
        };
        out.push(m);
    }
    out
}

/// Lagrange cubic through values at t = 0, 1, 2, 3 evaluated at `t`.
fn interp4(f0: C64, f1: C64, f2: C64, f3: C64, t: f64) -> C64 {
    let w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    let w1 = t * (t - 2.0) * (t - 3.0) / 2.0;
    let w2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
    let w3 = t * (t - 1.0) * (t - 2.0) / 6.0;
    f0 * w0 + f1 * w1 + f2 * w2 + f3 * w3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{make_closed_form, ClosedFormKind};
    use crate::grid::{schrodinger_residual, Grid};
    use std::f64::consts::PI;

    #[test]
    fn free_particle_reproduces_sine() {
        let g = Grid::new(-PI, PI, 2049).unwrap();
        let v = GridFunction::zero(g);
        let u = solve_ivp(&v, Energy::new(1.0, 0.0), 0.0, C64::new(0.0, 0.0), C64::new(1.0, 0.0))
            .unwrap();
        let mut worst = 0.0f64;
        for (i, x) in g.nodes().enumerate() {
            worst = worst.max((u.values[i] - C64::new(x.sin(), 0.0)).norm());
            worst = worst.max((u.derivs[i] - C64::new(x.cos(), 0.0)).norm());
        }
        assert!(worst <= 1e-8, "max error {worst}");
    }

    #[test]
    fn negative_energy_reproduces_exponential() {
        let a = 0.7;
        let g = Grid::new(-2.0, 4.0, 3001).unwrap();
        let v = GridFunction::zero(g);
        let u = solve_ivp(&v, Energy::new(-a * a, 0.0), 0.0, C64::new(1.0, 0.0), C64::new(a, 0.0))
            .unwrap();
        let mut worst = 0.0f64;
        for (i, x) in g.nodes().enumerate() {
            worst = worst.max((u.values[i] - C64::new((a * x).exp(), 0.0)).norm());
        }
        assert!(worst <= 1e-9, "max error {worst}");
    }

    #[test]
    fn complex_sinh_matches_integrated_solution() {
        // sinh(a x) with complex a, cross-checked against the IVP from 0.
        let a = C64::new(1.0, 1.0);
        let g = Grid::new(-2.0, 2.0, 4001).unwrap();
        let (exact, e) = make_closed_form(&ClosedFormKind::SinhA { a, x0: 0.0 }, g);
        let v = GridFunction::zero(g);
        let u = solve_ivp(&v, e, 0.0, C64::new(0.0, 0.0), a).unwrap();
        let i1 = g.index_of(1.0).unwrap();
        let rel = (u.values[i1] - exact.values[i1]).norm() / exact.values[i1].norm();
        assert!(rel <= 1e-8, "relative error {rel}");
        assert!((exact.values[i1] - C64::new(1.0, 1.0).sinh()).norm() < 1e-14);
    }

    #[test]
    fn richardson_step_halving_on_random_fourier_potential() {
        // Fixed 3-term Fourier potential; comparing n and 2n-1 solutions on
        // shared nodes bounds the integration error.
        let coeffs = [(1.3, 1.0, 0.2), (-0.7, 2.0, 1.1), (0.4, 3.0, -0.6)];
        let vf = |x: f64| {
            C64::new(
                coeffs.iter().map(|(c, m, p)| c * (m * x + p).cos()).sum::<f64>(),
                0.0,
            )
        };
        let e = Energy::new(1.2, 0.7);
        let n = 1025;
        let g1 = Grid::new(-PI, PI, n).unwrap();
        let g2 = Grid::new(-PI, PI, 2 * n - 1).unwrap();
        let v1 = GridFunction::from_fn(g1, |x| (vf(x), C64::new(0.0, 0.0)));
        let v2 = GridFunction::from_fn(g2, |x| (vf(x), C64::new(0.0, 0.0)));
        let u1 = solve_ivp(&v1, e, 0.0, C64::new(0.3, -0.2), C64::new(1.0, 0.5)).unwrap();
        let u2 = solve_ivp(&v2, e, 0.0, C64::new(0.3, -0.2), C64::new(1.0, 0.5)).unwrap();
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((u1.values[i] - u2.values[2 * i]).norm());
        }
        assert!(worst <= 1e-7, "Richardson difference {worst}");
    }

    #[test]
    fn integration_is_linear_in_the_initial_data() {
        let g = Grid::new(-PI, PI, 1025).unwrap();
        let v = GridFunction::from_fn(g, |x| (C64::new(x.cos(), 0.1 * x.sin()), C64::new(0.0, 0.0)));
        let e = Energy::new(0.9, -0.3);
        let (a0, da0) = (C64::new(1.0, 0.2), C64::new(-0.1, 0.4));
        let (b0, db0) = (C64::new(0.0, -1.0), C64::new(0.7, 0.0));
        let c1 = C64::new(0.6, 1.1);
        let c2 = C64::new(-1.3, 0.2);
        let ua = solve_ivp(&v, e, 0.0, a0, da0).unwrap();
        let ub = solve_ivp(&v, e, 0.0, b0, db0).unwrap();
        let uc = solve_ivp(&v, e, 0.0, c1 * a0 + c2 * b0, c1 * da0 + c2 * db0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.n {
            worst = worst.max((uc.values[i] - (ua.values[i] * c1 + ub.values[i] * c2)).norm());
        }
        let scale = uc.max_abs();
        assert!(worst <= 1e-9 * scale.max(1.0), "linearity defect {worst}");
    }

    #[test]
    fn residual_invariant_holds_for_integrated_solutions() {
        let g = Grid::new(-PI, PI, 2049).unwrap();
        let v = GridFunction::from_fn(g, |x| (C64::new((2.0 * x).cos(), 0.3), C64::new(0.0, 0.0)));
        let e = Energy::new(2.0, 0.4);
        let u = solve_ivp(&v, e, 0.0, C64::new(1.0, 0.0), C64::new(0.0, 1.0)).unwrap();
        let r = schrodinger_residual(&u, &v, e).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn blowup_reports_overflow() {
        let g = Grid::new(0.0, 400.0, 4001).unwrap();
        let v = GridFunction::zero(g);
        // e^{2x} over 400 units exceeds the cap.
        let r = solve_ivp(&v, Energy::new(-4.0, 0.0), 0.0, C64::new(1.0, 0.0), C64::new(2.0, 0.0));
        match r {
            Err(SusyError::Overflow { .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
