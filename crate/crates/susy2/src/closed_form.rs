//! Elementary solutions of `-u'' = E u` used as transformation functions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::grid::{Energy, Grid, GridFunction};

/// The elementary solution families of the zero potential. Parameters are
/// complex; the implied energy follows from the family:
/// `sin`/`cos` solve at `E = k²`, `sinh`/`cosh`/`exp` at `E = -a²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedFormKind {
    /// `sin(k (x - x0))`, energy `k²`.
    SinK {
        #[serde(with = "crate::io::complex_array")]
        k: C64,
        #[serde(default)]
        x0: f64,
    },
    /// `cos(k x + c)`, energy `k²`.
    CosKc {
        #[serde(with = "crate::io::complex_array")]
        k: C64,
        #[serde(with = "crate::io::complex_array")]
        c: C64,
    },
    /// `sinh(a (x - x0))`, energy `-a²`.
    SinhA {
        #[serde(with = "crate::io::complex_array")]
        a: C64,
        #[serde(default)]
        x0: f64,
    },
    /// `cosh(a x + c)`, energy `-a²`.
    CoshAc {
        #[serde(with = "crate::io::complex_array")]
        a: C64,
        #[serde(with = "crate::io::complex_array")]
        c: C64,
    },
    /// `exp(a x)`, energy `-a²`. `a = 0` gives the constant solution.
    ExpA {
        #[serde(with = "crate::io::complex_array")]
        a: C64,
    },
}

impl ClosedFormKind {
    /// Energy at which this form solves `-u'' = E u`.
    pub fn energy(&self) -> Energy {
        match *self {
            ClosedFormKind::SinK { k, .. } | ClosedFormKind::CosKc { k, .. } => Energy(k * k),
            ClosedFormKind::SinhA { a, .. }
            | ClosedFormKind::CoshAc { a, .. }
            | ClosedFormKind::ExpA { a } => Energy(-a * a),
        }
    }

    /// Value and exact derivative at `x`.
    pub fn eval(&self, x: f64) -> (C64, C64) {
        match *self {
            ClosedFormKind::SinK { k, x0 } => {
                let z = k * (x - x0);
                (z.sin(), k * z.cos())
            }
            ClosedFormKind::CosKc { k, c } => {
                let z = k * x + c;
                (z.cos(), -k * z.sin())
            }
            ClosedFormKind::SinhA { a, x0 } => {
                let z = a * (x - x0);
                (z.sinh(), a * z.cosh())
            }
            ClosedFormKind::CoshAc { a, c } => {
                let z = a * x + c;
                (z.cosh(), a * z.sinh())
            }
            ClosedFormKind::ExpA { a } => {
                let v = (a * x).exp();
                (v, a * v)
            }
        }
    }
}

/// Sample a closed form on a grid; returns the sampled function (with exact
/// analytic derivatives) and the implied energy.
pub fn make_closed_form(kind: &ClosedFormKind, grid: Grid) -> (GridFunction, Energy) {
    let f = GridFunction::from_fn(grid, |x| kind.eval(x));
    (f, kind.energy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn sin_k1_hits_one_at_half_pi() {
        let g = Grid::new(-PI, PI, 4097).unwrap();
        let kind = ClosedFormKind::SinK { k: C64::new(1.0, 0.0), x0: 0.0 };
        let (u, e) = make_closed_form(&kind, g);
        assert_eq!(e.0, C64::new(1.0, 0.0));
        let i = g.index_of(FRAC_PI_2).unwrap_or_else(|| {
            // pi/2 is not a node of this grid; evaluate by interpolation
            usize::MAX
        });
        let v = if i == usize::MAX { u.interp(FRAC_PI_2).unwrap() } else { u.values[i] };
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn exp_zero_rate_is_constant_one() {
        let g = Grid::new(-1.0, 1.0, 101).unwrap();
        let (u, e) = make_closed_form(&ClosedFormKind::ExpA { a: C64::new(0.0, 0.0) }, g);
        assert_eq!(e.0, C64::new(0.0, 0.0));
        assert!(u.values.iter().all(|v| (*v - C64::new(1.0, 0.0)).norm() == 0.0));
        assert!(u.derivs.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn implied_energies() {
        let k = C64::new(0.4, 1.1);
        assert_eq!(ClosedFormKind::SinK { k, x0: 0.3 }.energy().0, k * k);
        let a = C64::new(1.0, 1.0);
        assert_eq!(ClosedFormKind::SinhA { a, x0: 0.0 }.energy().0, -a * a);
        assert_eq!(ClosedFormKind::CoshAc { a, c: k }.energy().0, -a * a);
    }
}
