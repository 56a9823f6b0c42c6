//! The three Dirichlet boundary-value problems and boundary signatures of
//! their solutions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SusyError};
use crate::grid::{Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// Regular Sturm-Liouville problem on a finite interval, Dirichlet at
    /// both ends.
    FiniteInterval,
    /// Dirichlet at the origin, truncated at `x = L`.
    HalfLine,
    /// The whole real line, truncated at `x = ±L`.
    WholeLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialClass {
    Confining,
    Scattering,
    Generic,
}

/// One of the three Dirichlet problems, with truncation data for the
/// unbounded domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProblem {
    pub kind: ProblemKind,
    /// Left endpoint: finite for `FiniteInterval`, exactly 0 for `HalfLine`,
    /// `-L` for `WholeLine`.
    pub a: f64,
    /// Right endpoint: finite for `FiniteInterval`, `+L` otherwise.
    pub b: f64,
    /// Truncation half-width for the unbounded domains.
    pub trunc_l: f64,
    pub potential_class: PotentialClass,
}

impl BoundaryProblem {
    pub fn finite_interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(SusyError::InvalidInput(format!("need a < b, got [{a}, {b}]")));
        }
        Ok(BoundaryProblem {
            kind: ProblemKind::FiniteInterval,
            a,
            b,
            trunc_l: 0.0,
            potential_class: PotentialClass::Generic,
        })
    }

    pub fn half_line(l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(SusyError::InvalidInput(format!("need L > 0, got {l}")));
        }
        Ok(BoundaryProblem {
            kind: ProblemKind::HalfLine,
            a: 0.0,
            b: l,
            trunc_l: l,
            potential_class: PotentialClass::Scattering,
        })
    }

    pub fn whole_line(l: f64) -> Result<Self> {
        if !(l > 0.0) {
            return Err(SusyError::InvalidInput(format!("need L > 0, got {l}")));
        }
        Ok(BoundaryProblem {
            kind: ProblemKind::WholeLine,
            a: -l,
            b: l,
            trunc_l: l,
            potential_class: PotentialClass::Scattering,
        })
    }

    pub fn with_class(mut self, class: PotentialClass) -> Self {
        self.potential_class = class;
        self
    }

    /// A problem of the same kind truncated at `factor * L` (finite
    /// intervals are returned unchanged).
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        match self.kind {
            ProblemKind::FiniteInterval => Ok(*self),
            ProblemKind::HalfLine => {
                Ok(BoundaryProblem::half_line(self.trunc_l * factor)?.with_class(self.potential_class))
            }
            ProblemKind::WholeLine => {
                Ok(BoundaryProblem::whole_line(self.trunc_l * factor)?.with_class(self.potential_class))
            }
        }
    }

    /// Default computational grid covering the (truncated) domain.
    pub fn default_grid(&self, n: usize) -> Result<Grid> {
        Grid::new(self.a, self.b, n)
    }

    /// True when the endpoint is a genuine boundary (Dirichlet is imposed
    /// there) rather than a truncation of an infinite end.
    pub fn left_is_finite(&self) -> bool {
        !matches!(self.kind, ProblemKind::WholeLine)
    }

    pub fn right_is_finite(&self) -> bool {
        matches!(self.kind, ProblemKind::FiniteInterval)
    }
}

/// Growth class of a solution near a truncated infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticClass {
    Decaying,
    Growing,
    Oscillating,
}

/// Endpoint behaviour of a solution: vanishing flags at finite endpoints,
/// asymptotic classes at truncated infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    pub vanishes_left: bool,
    pub vanishes_right: bool,
    pub left_asym: Option<AsymptoticClass>,
    pub right_asym: Option<AsymptoticClass>,
}

/// Default relative tolerance for endpoint vanishing of integrator output.
pub const ENDPOINT_TOL_INTEGRATED: f64 = 1e-6;
/// Tighter tolerance appropriate for analytically evaluated functions.
pub const ENDPOINT_TOL_CLOSED_FORM: f64 = 1e-9;

/// Classify the endpoint behaviour of `u` for the given problem with the
/// default (integrator-grade) vanishing tolerance.
pub fn boundary_signature(u: &GridFunction, problem: &BoundaryProblem) -> Result<Signature> {
    boundary_signature_with(u, problem, ENDPOINT_TOL_INTEGRATED)
}

/// Same as [`boundary_signature`] with an explicit endpoint-vanishing
/// tolerance (relative to `max |u|`).
pub fn boundary_signature_with(
    u: &GridFunction,
    problem: &BoundaryProblem,
    endpoint_tol: f64,
) -> Result<Signature> {
    let scale = u.max_abs();
    if scale == 0.0 {
        return Err(SusyError::InvalidInput("signature of the zero function".into()));
    }
    let vanishes_left = u.values[0].norm() <= endpoint_tol * scale;
    let vanishes_right = u.values[u.n() - 1].norm() <= endpoint_tol * scale;
    let left_asym = if problem.left_is_finite() {
        None
    } else {
        Some(asymptotic_class(u, Side::Left)?)
    };
    let right_asym = if problem.right_is_finite() {
        None
    } else {
        Some(asymptotic_class(u, Side::Right)?)
    };
    Ok(Signature { vanishes_left, vanishes_right, left_asym, right_asym })
}

/// Which truncated end of the grid to classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Growth class near one truncated end: the outer slice (10%, widened to
/// 30% in the dead band) is cut in half and the maxima of the halves
/// compared; a dead-band ratio with repeated deep dips of |u| over the
/// outer half of the grid is oscillation.
pub fn asymptotic_class(u: &GridFunction, side: Side) -> Result<AsymptoticClass> {
    const GROW: f64 = 2.0;
    let n = u.n();
    let outward = |w: usize| -> Vec<f64> {
        match side {
            Side::Right => u.values[n - w..].iter().map(|v| v.norm()).collect(),
            // Mirror so that "outward" is always rightward in the slice.
            Side::Left => u.values[..w].iter().rev().map(|v| v.norm()).collect(),
        }
    };
    for frac in [0.10, 0.30] {
        let w = ((n as f64 * frac) as usize).max(8).min(n);
        let slice = outward(w);
        let mid = w / 2;
        let inner = slice[..mid].iter().cloned().fold(0.0, f64::max);
        let outer = slice[mid..].iter().cloned().fold(0.0, f64::max);
        if inner == 0.0 && outer == 0.0 {
            continue;
        }
        let ratio = outer / inner.max(f64::MIN_POSITIVE);
        if ratio >= GROW {
            return Ok(AsymptoticClass::Growing);
        }
        if ratio <= 1.0 / GROW {
            return Ok(AsymptoticClass::Decaying);
        }
        // Dead band: look for repeated deep dips over the outer half,
        // which a monotone envelope cannot produce more than once.
        let half = outward(n / 2);
        let peak = half.iter().cloned().fold(0.0, f64::max);
        let mut dips = 0;
        let mut below = false;
        for &m in &half {
            if m < 0.35 * peak {
                if !below {
                    dips += 1;
                    below = true;
                }
            } else {
                below = false;
            }
        }
        if dips >= 2 {
            return Ok(AsymptoticClass::Oscillating);
        }
    }
    Err(SusyError::AmbiguousAsymptotics(
        "growth ratio within the dead band and no oscillation pattern; increase L".into(),
    ))
}

/// Finite-moment proxy for the half-line scattering condition
/// `int_0^inf x |V(x)| dx < inf`, evaluated on the truncated grid.
///
/// Only a proxy is computable on a finite grid: the returned flag reports
/// whether the outer half of the domain dominates the moment, which hints
/// at divergence of the true integral.
pub fn scattering_moment_proxy(v: &GridFunction) -> (f64, bool) {
    let h = v.grid.spacing();
    let weights: Vec<C64> = v
        .grid
        .nodes()
        .zip(v.values.iter())
        .map(|(x, val)| {
            let m = if val.re.is_finite() && val.im.is_finite() { val.norm() } else { 0.0 };
            C64::new(x.abs() * m, 0.0)
        })
        .collect();
    let cum = crate::grid::cumulative_integral(&weights, h);
    let total = cum[v.n() - 1].re;
    let inner = cum[v.n() / 2].re;
    let tail_dominated = total > 0.0 && (total - inner) > 0.5 * total;
    (total, tail_dominated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use std::f64::consts::PI;

    fn gf(grid: Grid, f: impl Fn(f64) -> C64, df: impl Fn(f64) -> C64) -> GridFunction {
        GridFunction::from_fn(grid, |x| (f(x), df(x)))
    }

    #[test]
    fn sine_vanishes_at_both_ends_of_symmetric_box() {
        let problem = BoundaryProblem::finite_interval(-PI, PI).unwrap();
        let g = problem.default_grid(2049).unwrap();
        let u = gf(g, |x| C64::new((2.0 * x).sin(), 0.0), |x| C64::new(2.0 * (2.0 * x).cos(), 0.0));
        let sig = boundary_signature(&u, &problem).unwrap();
        assert!(sig.vanishes_left && sig.vanishes_right);
        assert!(sig.left_asym.is_none() && sig.right_asym.is_none());
    }

    #[test]
    fn decaying_exponential_on_half_line() {
        let problem = BoundaryProblem::half_line(15.0).unwrap();
        let g = problem.default_grid(2049).unwrap();
        let a = C64::new(-0.5, 0.5);
        let u = gf(g, |x| (a * x).exp(), |x| a * (a * x).exp());
        let sig = boundary_signature(&u, &problem).unwrap();
        assert!(!sig.vanishes_left);
        assert_eq!(sig.right_asym, Some(AsymptoticClass::Decaying));
    }

    #[test]
    fn complex_shifted_sine_oscillates() {
        let problem = BoundaryProblem::half_line(15.0).unwrap();
        let g = problem.default_grid(2049).unwrap();
        let k = 1.3;
        let c = C64::new(0.0, 0.25);
        let u = gf(
            g,
            |x| (C64::new(k * x, 0.0) + c).sin(),
            |x| (C64::new(k * x, 0.0) + c).cos() * k,
        );
        let sig = boundary_signature(&u, &problem).unwrap();
        assert_eq!(sig.right_asym, Some(AsymptoticClass::Oscillating));
    }

    #[test]
    fn growing_sinh_on_whole_line() {
        let problem = BoundaryProblem::whole_line(15.0).unwrap();
        let g = problem.default_grid(2049).unwrap();
        let a = C64::new(1.0, 0.3);
        let u = gf(g, |x| (a * x).sinh(), |x| a * (a * x).cosh());
        let sig = boundary_signature(&u, &problem).unwrap();
        assert_eq!(sig.left_asym, Some(AsymptoticClass::Growing));
        assert_eq!(sig.right_asym, Some(AsymptoticClass::Growing));
    }

    #[test]
    fn near_flat_growth_is_ambiguous() {
        let problem = BoundaryProblem::half_line(10.0).unwrap();
        let g = problem.default_grid(2049).unwrap();
        // exp(0.02 x): ratio over the outer 30% is ~ e^{0.03} = 1.03.
        let u = gf(g, |x| C64::new((0.02 * x).exp(), 0.0), |x| C64::new(0.02 * (0.02 * x).exp(), 0.0));
        match boundary_signature(&u, &problem) {
            Err(SusyError::AmbiguousAsymptotics(_)) => {}
            other => panic!("expected AmbiguousAsymptotics, got {other:?}"),
        }
    }

    #[test]
    fn moment_proxy_flags_tail_dominated_potential() {
        let problem = BoundaryProblem::half_line(20.0).unwrap();
        let g = problem.default_grid(2001).unwrap();
        let decaying = gf(g, |x| C64::new((-x).exp(), 0.0), |x| C64::new(-(-x).exp(), 0.0));
        let (m1, tail1) = scattering_moment_proxy(&decaying);
        assert!(m1 > 0.9 && m1 < 1.1, "moment {m1}"); // int x e^-x = 1
        assert!(!tail1);
        let flat = gf(g, |_| C64::new(1.0, 0.0), |_| C64::new(0.0, 0.0));
        let (_, tail2) = scattering_moment_proxy(&flat);
        assert!(tail2);
    }
}
