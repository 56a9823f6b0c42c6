//! First-order, second-order non-confluent and confluent SUSY (Darboux)
//! transformations of potentials and solutions.
//!
//! Second derivatives of transformation functions are always eliminated via
//! the Schrödinger equation, never formed by numerical differentiation:
//! for solutions at factorization constants `α1 ≠ α2`,
//!
//! ```text
//! W(u1, u2)'  = (α1 - α2) u1 u2
//! W(u1, u2)'' = (α1 - α2) (u1' u2 + u1 u2')
//! ```
//!
//! and in the confluent case `W_c = c + ∫ u²` gives `W_c' = u²`,
//! `W_c'' = 2 u u'`. The log-Wronskian second derivative is computed as
//! `(W'' W - W'²) / W²`, never by differencing `log W` (branch cuts).

use num_complex::Complex64 as C64;

use crate::error::{Result, SusyError};
use crate::grid::{schrodinger_residual, Energy, GridFunction};

/// Relative guard band: nodes where a denominator function is this small
/// compared to its cancellation scale are flagged non-finite.
pub const SINGULARITY_GUARD: f64 = 1e-9;

/// Relative threshold below which |u1| counts as a zero of a first-order
/// transformation function.
pub const FIRST_ORDER_GUARD: f64 = 1e-6;

/// Cancellation threshold for the regularity flag: the Wronskian must
/// retain at least this fraction of the magnitude of the products forming
/// it, at every node where those products are meaningful.
pub const REGULARITY_TOL: f64 = 1e-8;

/// Residual tolerance used to validate that transformation functions solve
/// the seed equation at their declared energies.
const SEED_RESIDUAL_TOL: f64 = 1e-5;

/// A fully described second-order transformation: either two distinct
/// factorization constants with their transformation functions, or the
/// confluent limit with one function, a constant `c` and an anchor point
/// for the integral.
#[derive(Debug, Clone)]
pub enum TransformationSpec {
    NonConfluent {
        u1: GridFunction,
        alpha1: Energy,
        u2: GridFunction,
        alpha2: Energy,
    },
    Confluent {
        u: GridFunction,
        alpha: Energy,
        c: C64,
        x_anchor: f64,
    },
}

impl TransformationSpec {
    pub fn grid(&self) -> &crate::grid::Grid {
        match self {
            TransformationSpec::NonConfluent { u1, .. } => &u1.grid,
            TransformationSpec::Confluent { u, .. } => &u.grid,
        }
    }

    pub fn is_confluent(&self) -> bool {
        matches!(self, TransformationSpec::Confluent { .. })
    }

    /// Check the structural invariants and that the transformation
    /// functions solve the seed equation at their declared energies.
    pub fn validate(&self, v0: &GridFunction) -> Result<()> {
        match self {
            TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
                u1.same_grid(v0)?;
                u2.same_grid(v0)?;
                if (alpha1.0 - alpha2.0).norm() <= 1e-12 * (1.0 + alpha1.0.norm()) {
                    return Err(SusyError::InconsistentSpec(
                        "non-confluent mode requires alpha1 != alpha2".into(),
                    ));
                }
                for (name, u, e) in [("u1", u1, alpha1), ("u2", u2, alpha2)] {
                    let r = schrodinger_residual(u, v0, *e)?;
                    if r > SEED_RESIDUAL_TOL {
                        return Err(SusyError::InconsistentSpec(format!(
                            "{name} does not solve the seed equation at its energy (residual {r:.2e})"
                        )));
                    }
                }
                Ok(())
            }
            TransformationSpec::Confluent { u, alpha, x_anchor, .. } => {
                u.same_grid(v0)?;
                if u.grid.index_of(*x_anchor).is_none() {
                    return Err(SusyError::InvalidInput(format!(
                        "x_anchor = {x_anchor} is not a grid node"
                    )));
                }
                let r = schrodinger_residual(u, v0, *alpha)?;
                if r > SEED_RESIDUAL_TOL {
                    return Err(SusyError::InconsistentSpec(format!(
                        "u does not solve the seed equation at its energy (residual {r:.2e})"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Output of a second-order transformation.
#[derive(Debug, Clone)]
pub struct TransformResult {
    /// The partner potential, flagged non-finite inside guard bands around
    /// zeros of the (generalized) Wronskian.
    pub v1: GridFunction,
    /// `W(u1, u2)` or `W_c`, with exact derivative samples.
    pub w: GridFunction,
    pub spec: TransformationSpec,
    /// True when the Wronskian stays away from zero on the open interval;
    /// false signals a singular transformation.
    pub regular: bool,
}

/// Pointwise Wronskian `u v' - u' v`. The derivative samples are zero,
/// which is exact when both functions solve the same equation at the same
/// energy; use [`wronskian2_at`] when the energies differ.
pub fn wronskian2(u: &GridFunction, v: &GridFunction) -> Result<GridFunction> {
    u.same_grid(v)?;
    let values: Vec<C64> = (0..u.n())
        .map(|i| u.values[i] * v.derivs[i] - u.derivs[i] * v.values[i])
        .collect();
    let derivs = vec![C64::new(0.0, 0.0); u.n()];
    GridFunction::new(u.grid, values, derivs)
}

/// Wronskian of two solutions at energies `eu`, `ev`, with the exact
/// derivative `W' = (eu - ev) u v`.
pub fn wronskian2_at(
    u: &GridFunction,
    eu: Energy,
    v: &GridFunction,
    ev: Energy,
) -> Result<GridFunction> {
    let mut w = wronskian2(u, v)?;
    let de = eu.0 - ev.0;
    for i in 0..w.n() {
        w.derivs[i] = de * u.values[i] * v.values[i];
    }
    Ok(w)
}

/// First-order partner potential from the transformation function `u1` at
/// energy `alpha1`: with `w = u1'/u1`,
/// `V~ = V0 - 2 w' = 2 w² - V0 + 2 α1`.
///
/// Nodes inside the guard band around a zero of `u1` are flagged
/// non-finite, not errored: a singular intermediate potential is still
/// useful diagnostically.
pub fn first_order_potential(
    v0: &GridFunction,
    u1: &GridFunction,
    alpha1: Energy,
) -> Result<GridFunction> {
    v0.same_grid(u1)?;
    let scale = u1.max_abs();
    let n = v0.n();
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
    for i in 0..n {
        if u1.values[i].norm() <= FIRST_ORDER_GUARD * scale {
            continue;
        }
        let w = u1.derivs[i] / u1.values[i];
        let wp = (v0.values[i] - alpha1.0) - w * w;
        values[i] = w * w * 2.0 - v0.values[i] + alpha1.0 * 2.0;
        derivs[i] = w * wp * 4.0 - v0.derivs[i];
    }
    GridFunction::new(v0.grid, values, derivs)
}

/// First-order map `ψ~ = -ψ' + w ψ` with `w = u1'/u1`; the derivative is
/// synthesised from the intermediate Schrödinger equation:
/// `ψ~' = (E - α1) ψ - w² ψ + w ψ'`.
pub fn first_order_map(
    psi: &GridFunction,
    e: Energy,
    u1: &GridFunction,
    alpha1: Energy,
) -> Result<GridFunction> {
    psi.same_grid(u1)?;
    let scale = u1.max_abs();
    let n = psi.n();
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
    for i in 0..n {
        if u1.values[i].norm() <= FIRST_ORDER_GUARD * scale {
            continue;
        }
        let w = u1.derivs[i] / u1.values[i];
        values[i] = -psi.derivs[i] + w * psi.values[i];
        derivs[i] = (e.0 - alpha1.0) * psi.values[i] - w * w * psi.values[i] + w * psi.derivs[i];
    }
    GridFunction::new(psi.grid, values, derivs)
}

/// The confluent replacement for the Wronskian:
/// `W_c(x) = c + ∫_{x_anchor}^x u²(y) dy`, integrated by composite Simpson
/// (the grid is uniform with an odd node count). The derivative samples are
/// `u²` exactly, by construction.
pub fn confluent_wc(u: &GridFunction, c: C64, x_anchor: f64) -> Result<GridFunction> {
    let i0 = u.grid.index_of(x_anchor).ok_or_else(|| {
        SusyError::InvalidInput(format!("x_anchor = {x_anchor} is not a grid node"))
    })?;
    let sq: Vec<C64> = u.values.iter().map(|z| z * z).collect();
    let cum = crate::grid::cumulative_integral_from(&sq, u.grid.spacing(), i0);
    let values: Vec<C64> = cum.iter().map(|ci| c + ci).collect();
    GridFunction::new(u.grid, values, sq)
}

/// Internal: W, W', W'' samples for a spec.
fn wronskian_of_spec(spec: &TransformationSpec) -> Result<(GridFunction, Vec<C64>)> {
    match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
            let w = wronskian2_at(u1, *alpha1, u2, *alpha2)?;
            let de = alpha1.0 - alpha2.0;
            let wpp: Vec<C64> = (0..w.n())
                .map(|i| de * (u1.derivs[i] * u2.values[i] + u1.values[i] * u2.derivs[i]))
                .collect();
            Ok((w, wpp))
        }
        TransformationSpec::Confluent { u, c, x_anchor, .. } => {
            let w = confluent_wc(u, *c, *x_anchor)?;
            let wpp: Vec<C64> = (0..w.n()).map(|i| u.values[i] * u.derivs[i] * 2.0).collect();
            Ok((w, wpp))
        }
    }
}

/// Cancellation scale of the Wronskian at each node: the sum of the
/// magnitudes of the products it is assembled from. Regularity is judged
/// against this local scale rather than the global maximum, so that
/// exponentially growing Wronskians on truncated lines are not
/// misclassified as singular.
fn cancellation_scale(spec: &TransformationSpec) -> Vec<f64> {
    match spec {
        TransformationSpec::NonConfluent { u1, u2, .. } => (0..u1.n())
            .map(|i| {
                (u1.values[i] * u2.derivs[i]).norm() + (u1.derivs[i] * u2.values[i]).norm()
            })
            .collect(),
        TransformationSpec::Confluent { u, c, x_anchor, .. } => {
            let sq: Vec<C64> = u.values.iter().map(|z| z * z).collect();
            let i0 = u.grid.index_of(*x_anchor).unwrap_or(u.n() / 2);
            let cum = crate::grid::cumulative_integral_from(&sq, u.grid.spacing(), i0);
            (0..u.n()).map(|i| c.norm() + cum[i].norm()).collect()
        }
    }
}

/// Build the second-order partner potential
/// `V1 = V0 - 2 (W'' W - W'²) / W²` with the Wronskian (or its confluent
/// replacement) taken from `spec`. Never errors on singular Wronskians:
/// affected nodes are flagged and `regular` is set to false.
pub fn second_order_potential(
    v0: &GridFunction,
    spec: &TransformationSpec,
) -> Result<TransformResult> {
    spec.validate(v0)?;
    let (w, wpp) = wronskian_of_spec(spec)?;
    let scales = cancellation_scale(spec);

    let n = v0.n();
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut regular = true;
    for i in 0..n {
        let wi = w.values[i];
        // A vanishing cancellation scale means every product forming W is
        // itself zero (an endpoint-type zero), which carries no
        // cancellation evidence.
        let meaningful = scales[i] > 1e-300;
        let ratio = if meaningful { wi.norm() / scales[i] } else { 0.0 };
        if meaningful && ratio <= REGULARITY_TOL {
            regular = false;
        }
        if wi.norm() == 0.0 || !meaningful || ratio <= SINGULARITY_GUARD {
            continue; // flagged
        }
        let wp = w.derivs[i];
        let g = wpp[i] * wi - wp * wp;
        values[i] = v0.values[i] - (g / (wi * wi)) * 2.0;
        // V1' = V0' - 2 (g' W - 2 g W') / W³ with g' = W''' W - W' W''.
        let wppp = third_derivative(spec, v0, i);
        let gp = wppp * wi - wp * wpp[i];
        derivs[i] = v0.derivs[i] - ((gp * wi - g * wp * 2.0) / (wi * wi * wi)) * 2.0;
    }
    let v1 = GridFunction::new(v0.grid, values, derivs)?;
    Ok(TransformResult { v1, w, spec: spec.clone(), regular })
}

/// W''' at node `i`, with all second derivatives of the transformation
/// functions rewritten through the seed equation.
fn third_derivative(spec: &TransformationSpec, v0: &GridFunction, i: usize) -> C64 {
    match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
            let de = alpha1.0 - alpha2.0;
            let d2u1 = (v0.values[i] - alpha1.0) * u1.values[i];
            let d2u2 = (v0.values[i] - alpha2.0) * u2.values[i];
            de * (d2u1 * u2.values[i]
                + u1.derivs[i] * u2.derivs[i] * 2.0
                + u1.values[i] * d2u2)
        }
        TransformationSpec::Confluent { u, alpha, .. } => {
            let d2u = (v0.values[i] - alpha.0) * u.values[i];
            (u.derivs[i] * u.derivs[i] + u.values[i] * d2u) * 2.0
        }
    }
}

/// Divide `num / w` with guard-band flagging, with the exact quotient
/// derivative `(num' W - num W') / W²`.
fn divide_by_w(num: &GridFunction, w: &GridFunction) -> Result<GridFunction> {
    num.same_grid(w)?;
    let wscale = w.max_abs();
    let n = num.n();
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
    for i in 0..n {
        let wi = w.values[i];
        if wi.norm() <= 1e-280 * wscale.max(1.0) {
            continue;
        }
        values[i] = num.values[i] / wi;
        derivs[i] = (num.derivs[i] * wi - num.values[i] * w.derivs[i]) / (wi * wi);
    }
    GridFunction::new(num.grid, values, derivs)
}

/// The images of the kernel energies: `φ_{α1} = u2 / W`, `φ_{α2} = u1 / W`
/// (an inessential constant factor is dropped). Confluent specs yield the
/// single image `φ_α = u / W_c`.
pub fn kernel_images(
    spec: &TransformationSpec,
    w: &GridFunction,
) -> Result<Vec<(Energy, GridFunction)>> {
    match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => Ok(vec![
            (*alpha1, divide_by_w(u2, w)?),
            (*alpha2, divide_by_w(u1, w)?),
        ]),
        TransformationSpec::Confluent { u, alpha, .. } => {
            Ok(vec![(*alpha, divide_by_w(u, w)?)])
        }
    }
}

/// Map a seed solution at energy `e` to a solution of the partner equation.
///
/// For `e` away from the factorization constants this is
/// `φ_E = (E - α2) ψ + (α1 - α2) W(u2, ψ) / W · u1` (and the confluent
/// analogue); at a factorization constant, an independent seed solution is
/// mapped onto the corresponding kernel image. Derivatives are synthesised
/// from the Wronskian identities, never by differencing.
pub fn second_order_map(
    psi: &GridFunction,
    e: Energy,
    spec: &TransformationSpec,
    w: &GridFunction,
) -> Result<GridFunction> {
    psi.same_grid(w)?;
    let e_tol = |alpha: Energy| 1e-9 * (1.0 + alpha.0.norm());
    match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
            if (e.0 - alpha1.0).norm() <= e_tol(*alpha1) {
                check_independent(psi, u1, "u1")?;
                return divide_by_w(u2, w);
            }
            if (e.0 - alpha2.0).norm() <= e_tol(*alpha2) {
                check_independent(psi, u2, "u2")?;
                return divide_by_w(u1, w);
            }
            let n = psi.n();
            let de12 = alpha1.0 - alpha2.0;
            let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
            let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
            for i in 0..n {
                let wi = w.values[i];
                if !(wi.re.is_finite() && wi.im.is_finite()) || wi.norm() == 0.0 {
                    continue;
                }
                // q = W(u2, ψ), q' = (α2 - E) u2 ψ
                let q = u2.values[i] * psi.derivs[i] - u2.derivs[i] * psi.values[i];
                let qp = (alpha2.0 - e.0) * u2.values[i] * psi.values[i];
                values[i] = (e.0 - alpha2.0) * psi.values[i] + de12 * q / wi * u1.values[i];
                derivs[i] = (e.0 - alpha2.0) * psi.derivs[i]
                    + de12
                        * (qp * u1.values[i] / wi + q * u1.derivs[i] / wi
                            - q * u1.values[i] * w.derivs[i] / (wi * wi));
            }
            GridFunction::new(psi.grid, values, derivs)
        }
        TransformationSpec::Confluent { u, alpha, .. } => {
            if (e.0 - alpha.0).norm() <= e_tol(*alpha) {
                check_independent(psi, u, "u")?;
                return divide_by_w(u, w);
            }
            let n = psi.n();
            let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
            let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
            for i in 0..n {
                let wi = w.values[i];
                if !(wi.re.is_finite() && wi.im.is_finite()) || wi.norm() == 0.0 {
                    continue;
                }
                // q = W(ψ, u), q' = (E - α) ψ u; W_c' = u².
                let q = psi.values[i] * u.derivs[i] - psi.derivs[i] * u.values[i];
                let qp = (e.0 - alpha.0) * psi.values[i] * u.values[i];
                let usq = u.values[i] * u.values[i];
                values[i] = (alpha.0 - e.0) * psi.values[i] + q / wi * u.values[i];
                derivs[i] = (alpha.0 - e.0) * psi.derivs[i]
                    + (qp * wi - q * usq) / (wi * wi) * u.values[i]
                    + q / wi * u.derivs[i];
            }
            GridFunction::new(psi.grid, values, derivs)
        }
    }
}

/// Kernel check: the map annihilates anything proportional to a
/// transformation function at the matching energy.
fn check_independent(psi: &GridFunction, u: &GridFunction, name: &str) -> Result<()> {
    let w = wronskian2(psi, u)?;
    let scale: f64 = (0..psi.n())
        .map(|i| (psi.values[i] * u.derivs[i]).norm() + (psi.derivs[i] * u.values[i]).norm())
        .fold(0.0, f64::max);
    if w.max_abs() <= 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(SusyError::KernelInput(format!(
            "psi is proportional to {name} at the matching energy; the image is identically zero"
        )));
    }
    Ok(())
}

/// Undo a second-order transformation: the kernel images of the forward
/// transformation, used as transformation functions on `V1` at the same
/// constants, recover the seed potential.
pub fn reverse_transform(result: &TransformResult) -> Result<GridFunction> {
    if !result.regular {
        return Err(SusyError::InvalidInput(
            "reverse transformation needs a regular forward result".into(),
        ));
    }
    match &result.spec {
        TransformationSpec::NonConfluent { alpha1, alpha2, .. } => {
            let images = kernel_images(&result.spec, &result.w)?;
            let (e1, phi1) = &images[0];
            let (e2, phi2) = &images[1];
            debug_assert_eq!(e1.0, alpha1.0);
            debug_assert_eq!(e2.0, alpha2.0);
            let rev = TransformationSpec::NonConfluent {
                u1: phi1.clone(),
                alpha1: *e1,
                u2: phi2.clone(),
                alpha2: *e2,
            };
            let back = second_order_potential_unchecked(&result.v1, &rev)?;
            Ok(back.v1)
        }
        TransformationSpec::Confluent { alpha: _, c, x_anchor, .. } => {
            let images = kernel_images(&result.spec, &result.w)?;
            let (e, phi) = &images[0];
            if c.norm() == 0.0 {
                return Err(SusyError::InvalidInput(
                    "confluent reverse needs W_c(x_anchor) = c != 0".into(),
                ));
            }
            let rev = TransformationSpec::Confluent {
                u: phi.clone(),
                alpha: *e,
                c: -C64::new(1.0, 0.0) / c,
                x_anchor: *x_anchor,
            };
            let back = second_order_potential_unchecked(&result.v1, &rev)?;
            Ok(back.v1)
        }
    }
}

/// The potential *shift* `-2 (log W)''` of a transformation, computed
/// without reference to the seed potential (its imaginary part decides
/// whether the partner is genuinely complex when the seed is real).
pub(crate) fn potential_shift(spec: &TransformationSpec) -> Result<TransformResult> {
    let zero = GridFunction::zero(*spec.grid());
    second_order_potential_unchecked(&zero, spec)
}

/// As [`second_order_potential`] but without validating the seed residual;
/// used by the reverse transformation, whose "potential" carries flagged
/// nodes that the stencil test would refuse.
fn second_order_potential_unchecked(
    v0: &GridFunction,
    spec: &TransformationSpec,
) -> Result<TransformResult> {
    let (w, wpp) = wronskian_of_spec(spec)?;
    let scales = cancellation_scale(spec);

    let n = v0.n();
    let mut values = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut derivs = vec![C64::new(f64::NAN, f64::NAN); n];
    let mut regular = true;
    for i in 0..n {
        let wi = w.values[i];
        let fin = wi.re.is_finite() && wi.im.is_finite();
        let meaningful = fin && scales[i] > 1e-300 && scales[i].is_finite();
        let ratio = if meaningful { wi.norm() / scales[i] } else { 0.0 };
        if meaningful && ratio <= REGULARITY_TOL {
            regular = false;
        }
        if !fin || wi.norm() == 0.0 || !meaningful || ratio <= SINGULARITY_GUARD {
            continue;
        }
        let v0i = v0.values[i];
        if !(v0i.re.is_finite() && v0i.im.is_finite()) {
            continue;
        }
        let wp = w.derivs[i];
        let g = wpp[i] * wi - wp * wp;
        values[i] = v0i - (g / (wi * wi)) * 2.0;
        let wppp = third_derivative(spec, v0, i);
        let gp = wppp * wi - wp * wpp[i];
        derivs[i] = v0.derivs[i] - ((gp * wi - g * wp * 2.0) / (wi * wi * wi)) * 2.0;
    }
    let v1 = GridFunction::new(v0.grid, values, derivs)?;
    Ok(TransformResult { v1, w, spec: spec.clone(), regular })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{make_closed_form, ClosedFormKind};
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn grid() -> Grid {
        Grid::new(-PI, PI, 2049).unwrap()
    }

    #[test]
    fn wronskian_is_antisymmetric_in_itself() {
        let g = grid();
        let (u, _) = make_closed_form(&ClosedFormKind::SinK { k: c(1.3, 0.4), x0: 0.1 }, g);
        let w = wronskian2(&u, &u).unwrap();
        assert!(w.max_abs() == 0.0);
    }

    #[test]
    fn wronskian_of_sin_cos_is_minus_one() {
        let g = grid();
        let (s, _) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (co, _) = make_closed_form(&ClosedFormKind::CosKc { k: c(1.0, 0.0), c: c(0.0, 0.0) }, g);
        let w = wronskian2(&s, &co).unwrap();
        for v in &w.values {
            assert!((v + c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn wronskian_matches_symbolic_expansion() {
        // W(sin(n0 x), cos(a x + b)) = -[n0 cos(n0 x) cos(a x + b)
        //                               + a sin(n0 x) sin(a x + b)]
        let g = grid();
        let n0 = 1.0;
        let a = 1.0 / 3.0;
        let b = c(0.0, 1.0);
        let (u, eu) = make_closed_form(&ClosedFormKind::SinK { k: c(n0, 0.0), x0: 0.0 }, g);
        let (v, ev) = make_closed_form(&ClosedFormKind::CosKc { k: c(a, 0.0), c: b }, g);
        let w = wronskian2_at(&u, eu, &v, ev).unwrap();
        for (i, x) in g.nodes().enumerate() {
            let expansion = (c(n0 * x, 0.0)).cos() * (c(a * x, 0.0) + b).cos() * n0
                + (c(n0 * x, 0.0)).sin() * (c(a * x, 0.0) + b).sin() * a;
            assert!((w.values[i] + expansion).norm() < 1e-12, "node {i}");
        }
        let i0 = g.index_of(0.0).unwrap();
        assert!((w.values[i0] + c(0.0, 1.0).cos()).norm() < 1e-14); // -cos(i) = -cosh(1)
    }

    #[test]
    fn wronskian_derivative_identity() {
        let g = grid();
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, a2) =
            make_closed_form(&ClosedFormKind::CosKc { k: c(1.0 / 3.0, 0.0), c: c(0.0, 0.4) }, g);
        let w = wronskian2_at(&u1, a1, &u2, a2).unwrap();
        // Fourth-order central difference of W against (α1-α2) u1 u2.
        let h = g.spacing();
        let mut worst = 0.0f64;
        let scale = w.max_abs();
        for i in 2..g.n - 2 {
            let num = (-w.values[i + 2] + w.values[i + 1] * 8.0 - w.values[i - 1] * 8.0
                + w.values[i - 2])
                / (12.0 * h);
            worst = worst.max((num - w.derivs[i]).norm());
        }
        assert!(worst <= 1e-6 * scale, "defect {worst}");
    }

    #[test]
    fn same_energy_wronskian_is_constant() {
        let g = grid();
        let v0 = GridFunction::from_fn(g, |x| (c((2.0 * x).cos(), 0.0), c(0.0, 0.0)));
        let e = Energy::new(1.7, 0.0);
        let ua = crate::ivp::solve_ivp(&v0, e, 0.0, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let ub = crate::ivp::solve_ivp(&v0, e, 0.0, c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let w = wronskian2(&ua, &ub).unwrap();
        let mean: C64 = w.values.iter().sum::<C64>() / w.n() as f64;
        let var: f64 =
            w.values.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / w.n() as f64;
        assert!(var.sqrt() / mean.norm() <= 1e-8, "rel stdev {}", var.sqrt() / mean.norm());
    }

    #[test]
    fn first_order_exp_leaves_zero_potential() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::ExpA { a: c(0.7, 0.0) }, g);
        let vt = first_order_potential(&v0, &u1, a1).unwrap();
        assert!(vt.flagged_nodes().is_empty());
        assert!(vt.max_abs() < 1e-12);
    }

    #[test]
    fn first_order_cosh_gives_sech_squared_well() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::CoshAc { a: c(1.0, 0.0), c: c(0.0, 0.0) }, g);
        let vt = first_order_potential(&v0, &u1, a1).unwrap();
        let i0 = g.index_of(0.0).unwrap();
        assert!((vt.values[i0] - c(-2.0, 0.0)).norm() < 1e-12);
        for (i, x) in g.nodes().enumerate() {
            let sech2 = 1.0 / x.cosh().powi(2);
            assert!((vt.values[i] - c(-2.0 * sech2, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn first_order_flags_zero_of_sine() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let vt = first_order_potential(&v0, &u1, a1).unwrap();
        let flagged = vt.flagged_nodes();
        let i0 = g.index_of(0.0).unwrap();
        assert!(flagged.contains(&i0), "x = 0 must be flagged");
        // Oracle: exactly the nodes with |u1| below the guard threshold.
        let scale = u1.max_abs();
        let expect: Vec<usize> = (0..g.n)
            .filter(|&i| u1.values[i].norm() <= FIRST_ORDER_GUARD * scale)
            .collect();
        assert_eq!(flagged, expect);
    }

    #[test]
    fn first_order_map_annihilates_its_kernel() {
        let g = grid();
        let (u1, a1) = make_closed_form(&ClosedFormKind::ExpA { a: c(0.5, 0.2) }, g);
        let img = first_order_map(&u1, a1, &u1, a1).unwrap();
        assert!(img.max_abs() <= 1e-12 * u1.max_abs());
    }

    #[test]
    fn first_order_map_against_hand_formula() {
        // u1 = e^{a x}, psi = sin(k x): image = -k cos(k x) + a sin(k x).
        let g = grid();
        let a = 0.8;
        let k = 2.0;
        let (u1, a1) = make_closed_form(&ClosedFormKind::ExpA { a: c(a, 0.0) }, g);
        let (psi, e) = make_closed_form(&ClosedFormKind::SinK { k: c(k, 0.0), x0: 0.0 }, g);
        let img = first_order_map(&psi, e, &u1, a1).unwrap();
        let i0 = g.index_of(0.0).unwrap();
        assert!((img.values[i0] - c(-k, 0.0)).norm() < 1e-13);
        for (i, x) in g.nodes().enumerate() {
            let want = c(-k * (k * x).cos() + a * (k * x).sin(), 0.0);
            assert!((img.values[i] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn first_order_image_solves_intermediate_equation() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::CoshAc { a: c(1.0, 0.0), c: c(0.0, 0.0) }, g);
        let (psi, e) = make_closed_form(&ClosedFormKind::SinK { k: c(2.0, 0.0), x0: 0.0 }, g);
        let vt = first_order_potential(&v0, &u1, a1).unwrap();
        let img = first_order_map(&psi, e, &u1, a1).unwrap();
        let r = schrodinger_residual(&img, &vt, e).unwrap();
        assert!(r <= 1e-6, "residual {r}");
    }

    #[test]
    fn trivial_exponential_pair_gives_zero_partner() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::ExpA { a: c(0.5, 0.0) }, g);
        let (u2, a2) = make_closed_form(&ClosedFormKind::ExpA { a: c(-0.3, 0.0) }, g);
        let r = second_order_potential(&v0, &TransformationSpec::NonConfluent {
            u1,
            alpha1: a1,
            u2,
            alpha2: a2,
        })
        .unwrap();
        assert!(r.regular);
        assert!(r.v1.flagged_nodes().is_empty());
        assert!(r.v1.max_abs() <= 1e-12, "max |V1| = {}", r.v1.max_abs());
    }

    #[test]
    fn confluent_wc_of_zero_function_is_c() {
        let g = grid();
        let u = GridFunction::zero(g);
        let w = confluent_wc(&u, c(0.3, -0.2), 0.0).unwrap();
        for v in &w.values {
            assert_eq!(*v, c(0.3, -0.2));
        }
    }

    #[test]
    fn confluent_wc_of_sine_matches_analytic_integral() {
        let k0 = 2.0;
        let g = Grid::new(0.0, PI, 2001).unwrap();
        let (u, _) = make_closed_form(&ClosedFormKind::SinK { k: c(k0, 0.0), x0: 0.0 }, g);
        let cc = c(0.1, 0.7);
        let w = confluent_wc(&u, cc, 0.0).unwrap();
        for (i, x) in g.nodes().enumerate() {
            let want = cc + c(x / 2.0 - (2.0 * k0 * x).sin() / (4.0 * k0), 0.0);
            assert!((w.values[i] - want).norm() < 1e-10, "node {i}");
        }
        let iend = g.index_of(PI / k0).unwrap();
        assert!((w.values[iend] - (cc + c(PI / (2.0 * k0), 0.0))).norm() < 1e-10);
    }

    #[test]
    fn second_order_map_kernel_energy_reports_kernel_input() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, a2) =
            make_closed_form(&ClosedFormKind::CosKc { k: c(1.0 / 3.0, 0.0), c: c(0.0, 0.4) }, g);
        let spec = TransformationSpec::NonConfluent { u1: u1.clone(), alpha1: a1, u2, alpha2: a2 };
        let r = second_order_potential(&v0, &spec).unwrap();
        match second_order_map(&u1, a1, &spec, &r.w) {
            Err(SusyError::KernelInput(_)) => {}
            other => panic!("expected KernelInput, got {other:?}"),
        }
    }

    #[test]
    fn second_order_map_at_kernel_energy_with_independent_solution() {
        // An independent solution at α1 maps onto u2/W, which solves the
        // partner equation at α1. The stencil error concentrates near the
        // Wronskian dip, so this check wants a fine grid.
        let g = Grid::new(-PI, PI, 8193).unwrap();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, a2) =
            make_closed_form(&ClosedFormKind::CosKc { k: c(1.0 / 3.0, 0.0), c: c(0.0, 0.4) }, g);
        let (v1_indep, _) = make_closed_form(&ClosedFormKind::CosKc { k: c(1.0, 0.0), c: c(0.0, 0.0) }, g);
        let spec = TransformationSpec::NonConfluent { u1, alpha1: a1, u2, alpha2: a2 };
        let r = second_order_potential(&v0, &spec).unwrap();
        let phi = second_order_map(&v1_indep, a1, &spec, &r.w).unwrap();
        let res = schrodinger_residual(&phi, &r.v1, a1).unwrap();
        assert!(res <= 1e-6, "residual {res}");
    }

    #[test]
    fn both_map_forms_agree() {
        // (E - α2) ψ + (α1 - α2) W(u2,ψ)/W u1  ==
        // (E - α1) ψ + (α1 - α2) W(u1,ψ)/W u2, pointwise.
        let g = grid();
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.2), x0: 0.3 }, g);
        let (u2, a2) = make_closed_form(&ClosedFormKind::CosKc { k: c(0.7, -0.1), c: c(0.2, 0.4) }, g);
        let (psi, e) = make_closed_form(&ClosedFormKind::SinhA { a: c(0.4, 0.6), x0: -0.2 }, g);
        let w = wronskian2_at(&u1, a1, &u2, a2).unwrap();
        let spec = TransformationSpec::NonConfluent {
            u1: u1.clone(),
            alpha1: a1,
            u2: u2.clone(),
            alpha2: a2,
        };
        let phi = second_order_map(&psi, e, &spec, &w).unwrap();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..g.n {
            let q1 = u1.values[i] * psi.derivs[i] - u1.derivs[i] * psi.values[i];
            let alt = (e.0 - a1.0) * psi.values[i]
                + (a1.0 - a2.0) * q1 / w.values[i] * u2.values[i];
            worst = worst.max((phi.values[i] - alt).norm());
            scale = scale.max(phi.values[i].norm());
        }
        assert!(worst <= 1e-9 * scale.max(1.0), "forms disagree by {worst}");
    }

    #[test]
    fn kernel_span_is_annihilated() {
        let g = grid();
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, a2) =
            make_closed_form(&ClosedFormKind::CosKc { k: c(1.0 / 3.0, 0.0), c: c(0.0, 0.4) }, g);
        let w = wronskian2_at(&u1, a1, &u2, a2).unwrap();
        let spec = TransformationSpec::NonConfluent {
            u1: u1.clone(),
            alpha1: a1,
            u2: u2.clone(),
            alpha2: a2,
        };
        // Map u2 at energy α2 via the generic branch by perturbing E far
        // outside the kernel tolerance is not the kernel test; instead
        // verify the algebraic annihilation: apply the generic formula at
        // E = α2 manually.
        let mut worst = 0.0f64;
        for i in 0..g.n {
            let q = u2.values[i] * u2.derivs[i] - u2.derivs[i] * u2.values[i]; // = 0
            let img = (a2.0 - a2.0) * u2.values[i] + (a1.0 - a2.0) * q / w.values[i];
            worst = worst.max(img.norm());
        }
        assert!(worst <= 1e-8 * u2.max_abs());
        // And the API-level guard:
        assert!(matches!(
            second_order_map(&u2, a2, &spec, &w),
            Err(SusyError::KernelInput(_))
        ));
    }

    #[test]
    fn reverse_recovers_zero_potential_from_trivial_pair() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::ExpA { a: c(0.5, 0.0) }, g);
        let (u2, a2) = make_closed_form(&ClosedFormKind::ExpA { a: c(-0.3, 0.0) }, g);
        let r = second_order_potential(&v0, &TransformationSpec::NonConfluent {
            u1,
            alpha1: a1,
            u2,
            alpha2: a2,
        })
        .unwrap();
        let back = reverse_transform(&r).unwrap();
        assert!(back.max_abs() <= 1e-9, "recovered max {}", back.max_abs());
    }

    #[test]
    fn confluent_round_trip_recovers_seed() {
        let g = Grid::new(0.0, 5.0 * PI, 4097).unwrap();
        let v0 = GridFunction::zero(g);
        let (u, alpha) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let spec =
            TransformationSpec::Confluent { u, alpha, c: c(0.0, 0.15), x_anchor: 0.0 };
        let r = second_order_potential(&v0, &spec).unwrap();
        assert!(r.regular);
        let back = reverse_transform(&r).unwrap();
        let mut worst = 0.0f64;
        for i in 0..g.n {
            let v = back.values[i];
            if v.re.is_finite() {
                worst = worst.max(v.norm());
            }
        }
        assert!(worst <= 1e-6, "recovered max {worst}");
    }

    #[test]
    fn rejects_equal_energies_in_nonconfluent_mode() {
        let g = grid();
        let v0 = GridFunction::zero(g);
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, _) = make_closed_form(&ClosedFormKind::CosKc { k: c(1.0, 0.0), c: c(0.0, 0.0) }, g);
        let spec = TransformationSpec::NonConfluent { u1, alpha1: a1, u2, alpha2: a1 };
        assert!(matches!(
            second_order_potential(&v0, &spec),
            Err(SusyError::InconsistentSpec(_))
        ));
    }
}
