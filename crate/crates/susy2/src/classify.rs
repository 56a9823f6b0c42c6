//! Zero counting for complex solutions and the complete case tables for
//! deciding reducibility of a second-order transformation.
//!
//! The central fact behind the tables: for a real potential, a solution at
//! complex energy can vanish at no more than one point of the closed
//! (possibly truncated) interval, and a solution at real energy that
//! vanishes somewhere is real up to a constant factor. Zero counts of the
//! transformation functions therefore decide whether a first-order chain
//! through a regular intermediate potential exists.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::darboux::TransformationSpec;
use crate::error::{Result, SusyError};
use crate::grid::{Energy, GridFunction};
use crate::problem::{
    asymptotic_class, boundary_signature, AsymptoticClass, BoundaryProblem, ProblemKind, Side,
    Signature, ENDPOINT_TOL_INTEGRATED,
};
use crate::spectral::{SeedSpectrum, SpectrumPrediction};

/// Relative dip gate: a local minimum of |u| must descend below this
/// fraction of max |u| to count as a zero candidate. The floor of the
/// fitted minimum for a genuine off-node zero is O(h²) relative, so the
/// gate sits well above that for desk-scale grids while still rejecting
/// the modulus dips of genuinely complex solutions.
pub const ZERO_DIP_TOL: f64 = 1e-4;

/// Relative tolerance for endpoint zeros in zero reports.
pub const ZERO_ENDPOINT_TOL: f64 = 1e-6;

fn is_real(e: Energy) -> bool {
    e.0.im.abs() <= 1e-9 * (1.0 + e.0.norm())
}

/// Interior zeros of a grid function, with refined locations and endpoint
/// flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroReport {
    /// Number of interior zeros.
    pub count: usize,
    /// Refined interior zero locations, strictly inside `(a, b)`.
    pub locations: Vec<f64>,
    /// Whether |u| vanishes at the left / right endpoint.
    pub endpoint_zeros: (bool, bool),
}

impl ZeroReport {
    /// Zeros on the closed interval, endpoint zeros included.
    pub fn closed_count(&self) -> usize {
        self.count + self.endpoint_zeros.0 as usize + self.endpoint_zeros.1 as usize
    }
}

/// Locate the zeros of `u` on the problem interval.
///
/// A zero is reported where |u|² attains a local minimum whose fitted
/// (quadratic-vertex) value drops below [`ZERO_DIP_TOL`] times max |u| and
/// the value of `u` flips sign across the dip: the ratio
/// `u(x + kh) / u(x - kh)` must be essentially negative real, which for
/// genuinely complex `u` is the phase winding by ≈ π. Locations are
/// refined by the quadratic fit on |u|².
pub fn count_zeros(u: &GridFunction, problem: &BoundaryProblem) -> ZeroReport {
    let _ = problem;
    let n = u.n();
    let scale = u.max_abs();
    if scale == 0.0 {
        return ZeroReport { count: 0, locations: Vec::new(), endpoint_zeros: (true, true) };
    }
    let q: Vec<f64> = u.values.iter().map(|z| z.norm_sqr()).collect();
    let h = u.grid.spacing();
    let mut locations = Vec::new();

    for i in 1..n - 1 {
        let local_min = q[i] <= q[i - 1] && q[i] <= q[i + 1] && (q[i] < q[i - 1] || q[i] < q[i + 1]);
        if !local_min {
            continue;
        }
        // Quadratic vertex of |u|² through the three nodes.
        let denom = q[i - 1] - 2.0 * q[i] + q[i + 1];
        let (x_star, q_star) = if denom > 0.0 {
            let delta = 0.5 * (q[i - 1] - q[i + 1]) / denom;
            let delta = delta.clamp(-1.0, 1.0);
            (
                u.grid.node(i) + delta * h,
                (q[i] - 0.125 * (q[i - 1] - q[i + 1]).powi(2) / denom).max(0.0),
            )
        } else {
            (u.grid.node(i), q[i])
        };
        if q_star.sqrt() > ZERO_DIP_TOL * scale {
            continue;
        }
        // Phase flip across the dip: step outward until |u| recovers.
        let mut k = 1usize;
        while k < 8 && i >= k + 1 && i + k + 1 < n && u.values[i + k].norm() < 3.0 * q[i].sqrt().max(1e-300) {
            k += 1;
        }
        if i < k || i + k >= n {
            continue;
        }
        let before = u.values[i - k];
        let after = u.values[i + k];
        if before.norm() == 0.0 || after.norm() == 0.0 {
            // A hard zero on an adjacent node; treat the dip as one zero.
            locations.push(x_star);
            continue;
        }
        let ratio = after / before;
        if ratio.re < 0.0 && ratio.im.abs() <= 0.6 * ratio.norm() {
            locations.push(x_star);
        }
    }
    // Merge refinements that collapsed onto the same point.
    locations.sort_by(|p, q2| p.partial_cmp(q2).unwrap());
    locations.dedup_by(|p, q2| (*p - *q2).abs() < 0.5 * h);
    // Interior only.
    let eps = 1.5 * h;
    locations.retain(|&x| x > u.grid.x0 + eps && x < u.grid.x1 - eps);

    let endpoint_zeros = (
        u.values[0].norm() <= ZERO_ENDPOINT_TOL * scale,
        u.values[n - 1].norm() <= ZERO_ENDPOINT_TOL * scale,
    );
    ZeroReport { count: locations.len(), locations, endpoint_zeros }
}

/// PT deviation `max |V(-x) - conj(V(x))|` over the nodes of a grid
/// symmetric about the origin.
pub fn pt_check(v: &GridFunction) -> Result<f64> {
    if !v.grid.is_symmetric() {
        return Err(SusyError::AsymmetricGrid(format!(
            "PT check needs a grid symmetric about 0, got [{}, {}]",
            v.grid.x0, v.grid.x1
        )));
    }
    let n = v.n();
    let fin = |z: C64| z.re.is_finite() && z.im.is_finite();
    let mut worst = 0.0f64;
    for i in 0..n {
        let a = v.values[n - 1 - i];
        let b = v.values[i];
        if fin(a) && fin(b) {
            worst = worst.max((a - b.conj()).norm());
        }
    }
    Ok(worst)
}

/// Case labels of the classification tables, serialized with stable names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    #[serde(rename = "FIN_a")]
    FinA,
    #[serde(rename = "FIN_b")]
    FinB,
    #[serde(rename = "FIN_c")]
    FinC,
    #[serde(rename = "FIN_d")]
    FinD,
    #[serde(rename = "FIN_confluent")]
    FinConfluent,
    #[serde(rename = "HL_a")]
    HlA,
    #[serde(rename = "HL_b")]
    HlB,
    #[serde(rename = "HL_c")]
    HlC,
    #[serde(rename = "HL_d")]
    HlD,
    #[serde(rename = "HL_confluent")]
    HlConfluent,
    #[serde(rename = "WL_nonconfluent")]
    WlNonConfluent,
    #[serde(rename = "WL_confluent")]
    WlConfluent,
}

/// Warning flags a verdict may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictFlag {
    /// A new level coincides with an existing one; the partner operator
    /// acquires an associated (Jordan) vector and stops being
    /// diagonalizable.
    NonDiagonalizable,
    /// A discrete level sits inside the continuous spectrum.
    EmbeddedEigenvalue,
    /// The partner tail decays too slowly for a scattering potential.
    NonScatteringTail,
    /// A point of the continuum may turn into a spectral singularity;
    /// reported, never certified.
    SpectralSingularityCandidate,
    /// The factorization constant lies in the continuum; whether the point
    /// is actually removed cannot be decided at finite truncation.
    ContinuumRemovalUncertain,
}

/// Classifier output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub problem_kind: ProblemKind,
    pub case_label: CaseLabel,
    pub irreducible: bool,
    pub real_spectrum: bool,
    pub prediction: SpectrumPrediction,
    pub pt_eligible: bool,
    pub flags: Vec<VerdictFlag>,
    pub notes: Vec<String>,
}

impl Verdict {
    /// Field-for-field agreement on the regression-relevant core.
    pub fn agrees_on_core(&self, other: &Verdict) -> bool {
        self.case_label == other.case_label
            && self.irreducible == other.irreducible
            && self.real_spectrum == other.real_spectrum
    }
}

/// Relative PT-deviation threshold for eligibility.
const PT_TOL: f64 = 1e-8;

/// Classify a transformation over a boundary problem, given the seed
/// spectrum. The verdict covers the case label, reducibility, the
/// predicted spectrum of the partner and PT eligibility (the latter
/// assumes the seed itself is PT-symmetric; only the potential *shift*
/// is inspected here).
pub fn classify(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let grid = spec.grid();
    if (grid.x0 - problem.a).abs() > 1e-9 || (grid.x1 - problem.b).abs() > 1e-9 {
        return Err(SusyError::InvalidInput(format!(
            "spec grid [{}, {}] does not span the problem interval [{}, {}]",
            grid.x0, grid.x1, problem.a, problem.b
        )));
    }
    let shift = crate::darboux::potential_shift(spec)?;
    let shift_scale = shift.v1.max_abs();
    let complex_shift = shift
        .v1
        .values
        .iter()
        .filter(|z| z.re.is_finite() && z.im.is_finite())
        .any(|z| z.im.abs() > 1e-10 * shift_scale.max(1.0));
    let pt_eligible = if grid.is_symmetric() {
        pt_check(&shift.v1)? <= PT_TOL * shift_scale.max(1.0)
    } else {
        false
    };

    let mut verdict = match (problem.kind, spec) {
        (ProblemKind::FiniteInterval, TransformationSpec::NonConfluent { .. }) => {
            classify_finite_nonconfluent(spec, problem, seed)?
        }
        (ProblemKind::FiniteInterval, TransformationSpec::Confluent { .. }) => {
            classify_finite_confluent(spec, problem, seed)?
        }
        (ProblemKind::HalfLine, TransformationSpec::NonConfluent { .. }) => {
            classify_half_line_nonconfluent(spec, problem, seed)?
        }
        (ProblemKind::HalfLine, TransformationSpec::Confluent { .. }) => {
            classify_half_line_confluent(spec, problem, seed)?
        }
        (ProblemKind::WholeLine, TransformationSpec::NonConfluent { .. }) => {
            classify_whole_line_nonconfluent(spec, problem, seed)?
        }
        (ProblemKind::WholeLine, TransformationSpec::Confluent { .. }) => {
            classify_whole_line_confluent(spec, problem, seed)?
        }
    };
    verdict.pt_eligible = pt_eligible;
    if !shift.regular {
        verdict.notes.push(
            "the Wronskian approaches zero inside the interval: the partner potential is singular"
                .to_string(),
        );
    }
    if complex_shift {
        verdict.notes.push("the potential shift is genuinely complex".to_string());
    } else {
        verdict.notes.push("the potential shift is real".to_string());
    }
    Ok(verdict)
}

struct NonConfluentParts<'a> {
    u1: &'a GridFunction,
    alpha1: Energy,
    u2: &'a GridFunction,
    alpha2: Energy,
    sig1: Signature,
    sig2: Signature,
}

fn nonconfluent_parts<'a>(
    spec: &'a TransformationSpec,
    problem: &BoundaryProblem,
) -> Result<NonConfluentParts<'a>> {
    match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
            let sig1 = boundary_signature(u1, problem)?;
            let sig2 = boundary_signature(u2, problem)?;
            Ok(NonConfluentParts { u1, alpha1: *alpha1, u2, alpha2: *alpha2, sig1, sig2 })
        }
        _ => unreachable!("caller matched the mode"),
    }
}

fn seed_index(seed: &SeedSpectrum, e: Energy) -> Option<usize> {
    seed.index_of(e.0, 1e-6 * (1.0 + e.0.norm()))
}

fn classify_finite_nonconfluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let mut p = nonconfluent_parts(spec, problem)?;
    let mut notes = Vec::new();
    let both = |s: &Signature| s.vanishes_left && s.vanishes_right;
    // Keep the fully vanishing function in the u1 slot.
    if !both(&p.sig1) && both(&p.sig2) {
        std::mem::swap(&mut p.u1, &mut p.u2);
        std::mem::swap(&mut p.alpha1, &mut p.alpha2);
        std::mem::swap(&mut p.sig1, &mut p.sig2);
        notes.push("transformation functions swapped so that u1 is the eigenfunction".into());
    }

    let mut flags = Vec::new();
    if both(&p.sig1) {
        let k1 = seed_index(seed, p.alpha1);
        if k1.is_none() {
            notes.push(format!(
                "u1 vanishes at both ends but alpha1 = {} matches no supplied seed level",
                p.alpha1.0
            ));
        }
        let k1_positive = k1.map(|k| k > 0).unwrap_or(true);
        if both(&p.sig2) {
            // (a): two eigenfunctions; only real partners are reachable.
            let k2 = seed_index(seed, p.alpha2);
            let mut prediction = SpectrumPrediction::modified(seed.clone());
            prediction.removed = vec![p.alpha1.0, p.alpha2.0];
            notes.push(
                "case (a): both functions are eigenfunctions; the potential difference stays real"
                    .into(),
            );
            let irreducible = k1_positive && k2.map(|k| k > 0).unwrap_or(true);
            return Ok(verdict_stub(
                problem,
                CaseLabel::FinA,
                irreducible,
                true,
                prediction,
                flags,
                notes,
            ));
        }
        if p.sig2.vanishes_left || p.sig2.vanishes_right {
            // (b): u2 vanishes at exactly one end.
            let mut prediction = SpectrumPrediction::modified(seed.clone());
            prediction.removed = vec![p.alpha1.0];
            let real_spectrum = if is_real(p.alpha2) {
                prediction.added = vec![p.alpha2.0];
                true
            } else {
                prediction.complex_levels = vec![p.alpha2.0];
                false
            };
            notes.push(
                "case (b): u2 vanishes at one end; the level alpha2 attaches to the partner"
                    .into(),
            );
            let irreducible = k1.map(|k| k > 0).unwrap_or(true);
            if !irreducible {
                notes.push("u1 is the ground state: the chain factors through it".into());
            }
            return Ok(verdict_stub(
                problem,
                CaseLabel::FinB,
                irreducible,
                real_spectrum,
                prediction,
                flags,
                notes,
            ));
        }
        // (c): u2 vanishes at neither end.
        let mut prediction = SpectrumPrediction::modified(seed.clone());
        prediction.removed = vec![p.alpha1.0];
        let real_spectrum = if is_real(p.alpha2) {
            prediction.added = vec![p.alpha2.0];
            if let Some(l) = seed_index(seed, p.alpha2) {
                flags.push(VerdictFlag::NonDiagonalizable);
                notes.push(format!(
                    "alpha2 coincides with seed level {l}: the partner becomes non-diagonalizable"
                ));
            }
            true
        } else {
            prediction.complex_levels = vec![p.alpha2.0];
            notes.push("complex alpha2 puts a complex level into the partner spectrum".into());
            false
        };
        notes.push(
            "case (c): u1 is an interior eigenfunction, u2 vanishes at neither end".into(),
        );
        let irreducible = k1.map(|k| k > 0).unwrap_or(true);
        if !irreducible {
            notes.push("u1 is the ground state: the chain factors through it".into());
        }
        return Ok(verdict_stub(
            problem,
            CaseLabel::FinC,
            irreducible,
            real_spectrum,
            prediction,
            flags,
            notes,
        ));
    }

    // (d): u1 and u2 vanish at opposite single ends.
    let d_pattern = (p.sig1.vanishes_left
        && !p.sig1.vanishes_right
        && p.sig2.vanishes_right
        && !p.sig2.vanishes_left)
        || (p.sig1.vanishes_right
            && !p.sig1.vanishes_left
            && p.sig2.vanishes_left
            && !p.sig2.vanishes_right);
    if !d_pattern {
        return Err(SusyError::InconsistentSpec(format!(
            "finite-interval vanishing pattern matches no case: u1 = ({}, {}), u2 = ({}, {})",
            p.sig1.vanishes_left, p.sig1.vanishes_right, p.sig2.vanishes_left, p.sig2.vanishes_right
        )));
    }
    let prediction = SpectrumPrediction::isospectral(seed.clone());
    let mut notes2 = notes;
    notes2.push(
        "case (d): the functions vanish at opposite ends; neither kernel image satisfies the boundary conditions, the partner is strictly isospectral"
            .into(),
    );
    let any_complex = !is_real(p.alpha1) || !is_real(p.alpha2);
    let irreducible = if any_complex {
        notes2.push(
            "a complex factorization constant disconnects the intermediate spectrum: irreducible of the new type"
                .into(),
        );
        true
    } else {
        let n1 = count_zeros(p.u1, problem).count;
        let n2 = count_zeros(p.u2, problem).count;
        notes2.push("real constants in case (d) give a real potential shift only".into());
        n1 > 0 && n2 > 0
    };
    Ok(verdict_stub(problem, CaseLabel::FinD, irreducible, true, prediction, Vec::new(), notes2))
}

fn classify_finite_confluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let (u, alpha, c) = match spec {
        TransformationSpec::Confluent { u, alpha, c, .. } => (u, *alpha, *c),
        _ => unreachable!(),
    };
    let sig = boundary_signature(u, problem)?;
    if !(sig.vanishes_left && sig.vanishes_right) {
        return Err(SusyError::InconsistentSpec(
            "finite-interval confluent mode needs u to vanish at both ends (an eigenfunction)"
                .into(),
        ));
    }
    let k = seed_index(seed, alpha);
    let mut notes = vec![
        "confluent case: u is an eigenfunction; the spectrum is unchanged".to_string(),
    ];
    if k.is_none() {
        notes.push(format!("alpha = {} matches no supplied seed level", alpha.0));
    }
    if c.im.abs() <= 1e-12 * (1.0 + c.norm()) {
        notes.push("real c keeps the potential shift real".into());
    }
    let irreducible = k.map(|k| k > 0).unwrap_or(true);
    if !irreducible {
        notes.push("u is the ground state: the chain factors through it".into());
    }
    let prediction = SpectrumPrediction::isospectral(seed.clone());
    Ok(verdict_stub(
        problem,
        CaseLabel::FinConfluent,
        irreducible,
        true,
        prediction,
        Vec::new(),
        notes,
    ))
}

fn continuum_threshold(seed: &SeedSpectrum) -> Option<f64> {
    match seed {
        SeedSpectrum::ContinuumWithDiscrete { threshold, .. } => Some(*threshold),
        _ => None,
    }
}

/// Shared handling of the removed-or-flagged level `alpha1` on unbounded
/// domains.
fn remove_or_flag(
    seed: &SeedSpectrum,
    alpha1: Energy,
    prediction: &mut SpectrumPrediction,
    flags: &mut Vec<VerdictFlag>,
    notes: &mut Vec<String>,
) {
    if seed_index(seed, alpha1).is_some() {
        prediction.removed.push(alpha1.0);
        notes.push(format!("discrete seed level at {} is deleted", alpha1.0));
    } else if let Some(th) = continuum_threshold(seed) {
        if alpha1.re() >= th && is_real(alpha1) {
            flags.push(VerdictFlag::ContinuumRemovalUncertain);
            notes.push(format!(
                "alpha1 = {} lies in the continuum; the spectra coincide except possibly at that point",
                alpha1.0
            ));
        }
    }
}

fn classify_half_line_nonconfluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let (mut u1, mut alpha1, mut u2, mut alpha2) = match spec {
        TransformationSpec::NonConfluent { u1, alpha1, u2, alpha2 } => {
            (u1, *alpha1, u2, *alpha2)
        }
        _ => unreachable!("caller matched the mode"),
    };
    let vanishes_at_origin = |u: &GridFunction| {
        u.values[0].norm() <= ENDPOINT_TOL_INTEGRATED * u.max_abs()
    };
    let mut notes = Vec::new();
    // u1 is the function pinned to the origin; prefer a real constant there.
    let v1_0 = vanishes_at_origin(u1);
    let v2_0 = vanishes_at_origin(u2);
    let swap = (!v1_0 && v2_0) || (v1_0 && v2_0 && !is_real(alpha1) && is_real(alpha2));
    if swap {
        std::mem::swap(&mut u1, &mut u2);
        std::mem::swap(&mut alpha1, &mut alpha2);
        notes.push("transformation functions swapped so that u1 vanishes at the origin".into());
    }
    if !vanishes_at_origin(u1) {
        return Err(SusyError::InconsistentSpec(
            "half-line mode needs a transformation function vanishing at the origin".into(),
        ));
    }
    let mut flags = Vec::new();
    let u1_nodes = count_zeros(u1, problem).count;
    let alpha1_real = is_real(alpha1);
    if !alpha1_real {
        notes.push(
            "complex alpha1 makes u1 nodeless on the half line; any such chain is reducible"
                .into(),
        );
    }

    let mut prediction = SpectrumPrediction::modified(seed.clone());
    remove_or_flag(seed, alpha1, &mut prediction, &mut flags, &mut notes);

    let (label, real_spectrum, irreducible) = if vanishes_at_origin(u2) {
        // (a) u2 also vanishes at the origin.
        notes.push("case (a): both functions vanish at the origin".into());
        if prediction.removed.is_empty() {
            prediction.isospectral = prediction.added.is_empty();
        }
        let u2_nodes = count_zeros(u2, problem).count;
        let irr = alpha1_real && is_real(alpha2) && u1_nodes > 0 && u2_nodes > 0;
        if !is_real(alpha2) {
            notes.push(
                "complex alpha2 gives a complex partner, reachable by a reducible chain".into(),
            );
        }
        (CaseLabel::HlA, true, irr)
    } else {
        match asymptotic_class(u2, Side::Right)? {
            AsymptoticClass::Decaying => {
                notes.push("case (b): u2 decays at infinity".into());
                let real = true; // the kernel image at alpha2 grows: no level attaches
                let irr = alpha1_real && u1_nodes > 0 && !is_real(alpha2);
                if is_real(alpha2) {
                    notes.push("real alpha2 keeps the potential shift real".into());
                }
                (CaseLabel::HlB, real, irr)
            }
            AsymptoticClass::Growing => {
                notes.push("case (c): u2 grows at infinity; the level alpha2 attaches".into());
                let real = if is_real(alpha2) {
                    prediction.added.push(alpha2.0);
                    true
                } else {
                    prediction.complex_levels.push(alpha2.0);
                    false
                };
                (CaseLabel::HlC, real, alpha1_real && u1_nodes > 0)
            }
            AsymptoticClass::Oscillating => {
                notes.push(
                    "case (d): u2 oscillates at infinity; alpha2 sits in the continuum".into(),
                );
                if is_real(alpha2) && alpha2.re() > continuum_threshold(seed).unwrap_or(0.0) {
                    prediction.spectral_singularity_candidates.push(alpha2.0);
                    flags.push(VerdictFlag::SpectralSingularityCandidate);
                    notes.push(
                        "alpha2 is a spectral-singularity candidate; reported, not certified"
                            .into(),
                    );
                }
                (CaseLabel::HlD, true, alpha1_real && u1_nodes > 0)
            }
        }
    };
    if prediction.removed.is_empty()
        && prediction.added.is_empty()
        && prediction.complex_levels.is_empty()
    {
        prediction.isospectral = true;
    }
    Ok(verdict_stub(problem, label, irreducible, real_spectrum, prediction, flags, notes))
}

fn classify_half_line_confluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let (u, alpha, c, x_anchor) = match spec {
        TransformationSpec::Confluent { u, alpha, c, x_anchor } => (u, *alpha, *c, *x_anchor),
        _ => unreachable!(),
    };
    let sig = boundary_signature(u, problem)?;
    if !sig.vanishes_left {
        return Err(SusyError::InconsistentSpec(
            "half-line confluent mode needs u(0) = 0".into(),
        ));
    }
    let mut notes = Vec::new();
    let mut flags = Vec::new();
    if x_anchor.abs() > 1e-9 {
        notes.push(format!("anchor x0 = {x_anchor} away from the origin only shifts c"));
    }
    let mut prediction = SpectrumPrediction::modified(seed.clone());
    let alpha_real = is_real(alpha);
    let real_spectrum;
    if alpha_real {
        let th = continuum_threshold(seed).unwrap_or(0.0);
        if alpha.re() > th {
            prediction.embedded_flags.push((alpha, true));
            flags.push(VerdictFlag::EmbeddedEigenvalue);
            flags.push(VerdictFlag::NonScatteringTail);
            notes.push(
                "alpha lies in the continuum: the partner keeps it as an embedded level and its tail decays like 1/x², too slowly for a scattering potential"
                    .into(),
            );
        } else if seed_index(seed, alpha).is_none() {
            prediction.added.push(alpha.0);
            notes.push("alpha joins the partner spectrum as a new discrete level".into());
        } else {
            notes.push("alpha is already a seed level; the spectrum is unchanged".into());
        }
        real_spectrum = true;
    } else {
        prediction.complex_levels.push(alpha.0);
        notes.push("complex alpha attaches a complex level; the chain is reducible".into());
        real_spectrum = false;
    }
    if c.im.abs() <= 1e-12 * (1.0 + c.norm()) {
        notes.push("real c keeps the potential shift real".into());
    }
    let nodes = count_zeros(u, problem).count;
    let irreducible = alpha_real && nodes > 0;
    if alpha_real && nodes == 0 {
        notes.push("u is nodeless on the half line: the chain is reducible".into());
    }
    Ok(verdict_stub(
        problem,
        CaseLabel::HlConfluent,
        irreducible,
        real_spectrum,
        prediction,
        flags,
        notes,
    ))
}

fn classify_whole_line_nonconfluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let p = nonconfluent_parts(spec, problem)?;
    let mut notes = vec![
        "whole line: every transformation reaching a complex partner with a real spectrum factors into two regular first-order steps"
            .to_string(),
    ];
    let flags = Vec::new();
    let mut prediction = SpectrumPrediction::modified(seed.clone());

    let mut jost_decay_sides = Vec::new();
    for (name, sig, alpha) in [("u1", &p.sig1, p.alpha1), ("u2", &p.sig2, p.alpha2)] {
        let la = sig.left_asym.unwrap_or(AsymptoticClass::Oscillating);
        let ra = sig.right_asym.unwrap_or(AsymptoticClass::Oscillating);
        match (la, ra) {
            (AsymptoticClass::Growing, AsymptoticClass::Growing) => {
                // The kernel image decays at both infinities: the constant
                // joins the partner spectrum.
                if is_real(alpha) {
                    prediction.added.push(alpha.0);
                    notes.push(format!("{name} grows at both infinities: level {} attaches", alpha.0));
                } else {
                    prediction.complex_levels.push(alpha.0);
                    notes.push(format!(
                        "{name} grows at both infinities with complex constant: complex level {} attaches",
                        alpha.0
                    ));
                }
            }
            (AsymptoticClass::Decaying, AsymptoticClass::Decaying) => {
                prediction.removed.push(alpha.0);
                notes.push(format!("{name} is a bound state of the seed: level {} is deleted", alpha.0));
            }
            (AsymptoticClass::Decaying, _) | (_, AsymptoticClass::Decaying) => {
                jost_decay_sides.push((name, la == AsymptoticClass::Decaying));
            }
            _ => {}
        }
    }
    if jost_decay_sides.len() == 2
        && jost_decay_sides[0].1 != jost_decay_sides[1].1
        && !is_real(p.alpha1)
        && !is_real(p.alpha2)
    {
        notes.push(
            "Jost pair: the functions decay at opposite infinities; the partner is isospectral"
                .into(),
        );
    }
    if prediction.removed.is_empty()
        && prediction.added.is_empty()
        && prediction.complex_levels.is_empty()
    {
        prediction.isospectral = true;
    }
    let real_spectrum = prediction.complex_levels.is_empty();
    Ok(verdict_stub(
        problem,
        CaseLabel::WlNonConfluent,
        false,
        real_spectrum,
        prediction,
        flags,
        notes,
    ))
}

fn classify_whole_line_confluent(
    spec: &TransformationSpec,
    problem: &BoundaryProblem,
    seed: &SeedSpectrum,
) -> Result<Verdict> {
    let (u, alpha, c) = match spec {
        TransformationSpec::Confluent { u, alpha, c, .. } => (u, *alpha, *c),
        _ => unreachable!(),
    };
    let sig = boundary_signature(u, problem)?;
    let mut notes = Vec::new();
    let mut flags = Vec::new();
    let mut prediction = SpectrumPrediction::modified(seed.clone());
    let alpha_real = is_real(alpha);
    let la = sig.left_asym.unwrap_or(AsymptoticClass::Oscillating);
    let ra = sig.right_asym.unwrap_or(AsymptoticClass::Oscillating);
    let oscillating = la == AsymptoticClass::Oscillating && ra == AsymptoticClass::Oscillating;

    let real_spectrum = if alpha_real {
        let th = continuum_threshold(seed).unwrap_or(0.0);
        if alpha.re() > th && oscillating {
            prediction.embedded_flags.push((alpha, true));
            flags.push(VerdictFlag::EmbeddedEigenvalue);
            notes.push("alpha sits in the continuum as an embedded level".into());
        } else if seed_index(seed, alpha).is_none() {
            prediction.added.push(alpha.0);
            notes.push("level alpha joins the discrete spectrum of the partner".into());
        }
        true
    } else {
        prediction.complex_levels.push(alpha.0);
        notes.push("complex alpha attaches a complex level".into());
        false
    };
    let nodes = count_zeros(u, problem).count;
    let complex_c = c.im.abs() > 1e-12 * (1.0 + c.norm());
    if !complex_c {
        notes.push("real c keeps the potential shift real".into());
    }
    let irreducible = alpha_real && complex_c && nodes > 0;
    if alpha_real && nodes == 0 {
        notes.push("u is nodeless: the confluent chain starts with a regular step".into());
    }
    Ok(verdict_stub(
        problem,
        CaseLabel::WlConfluent,
        irreducible,
        real_spectrum,
        prediction,
        flags,
        notes,
    ))
}

fn verdict_stub(
    problem: &BoundaryProblem,
    case_label: CaseLabel,
    irreducible: bool,
    real_spectrum: bool,
    prediction: SpectrumPrediction,
    flags: Vec<VerdictFlag>,
    notes: Vec<String>,
) -> Verdict {
    Verdict {
        problem_kind: problem.kind,
        case_label,
        irreducible,
        real_spectrum,
        prediction,
        pt_eligible: false,
        flags,
        notes,
    }
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

    #[test]
    fn zeros_of_sin_two_x() {
        let problem = BoundaryProblem::finite_interval(-PI, PI).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let (u, _) = make_closed_form(&ClosedFormKind::SinK { k: c(2.0, 0.0), x0: 0.0 }, g);
        let r = count_zeros(&u, &problem);
        assert_eq!(r.count, 3, "locations: {:?}", r.locations);
        for (loc, want) in r.locations.iter().zip([-PI / 2.0, 0.0, PI / 2.0]) {
            assert!((loc - want).abs() < 1e-4, "{loc} vs {want}");
        }
        assert!(r.endpoint_zeros.0 && r.endpoint_zeros.1);
    }

    #[test]
    fn single_zero_of_complex_sinh() {
        let problem = BoundaryProblem::whole_line(5.0).unwrap();
        let g = problem.default_grid(4001).unwrap();
        let a = c(1.0, 0.3);
        let (u, _) = make_closed_form(&ClosedFormKind::SinhA { a, x0: 0.5 }, g);
        let r = count_zeros(&u, &problem);
        assert_eq!(r.count, 1, "locations {:?}", r.locations);
        assert!((r.locations[0] - 0.5).abs() < 1e-4);
        assert!(!r.endpoint_zeros.0 && !r.endpoint_zeros.1);
    }

    #[test]
    fn off_node_zeros_are_still_found() {
        let problem = BoundaryProblem::half_line(15.0).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let (u, _) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let r = count_zeros(&u, &problem);
        // pi, 2pi, 3pi, 4pi lie inside (0, 15); none are grid nodes.
        assert_eq!(r.count, 4, "locations {:?}", r.locations);
        assert!(r.endpoint_zeros.0);
    }

    #[test]
    fn complex_energy_solutions_have_clean_dips() {
        // The modulus of sin(kx + ic) dips without vanishing; no zeros.
        let problem = BoundaryProblem::finite_interval(-PI, PI).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let u = GridFunction::from_fn(g, |x| {
            let z = C64::new(1.7 * x, 0.0) + C64::new(0.0, 0.4);
            (z.sin(), z.cos() * 1.7)
        });
        let r = count_zeros(&u, &problem);
        assert_eq!(r.count, 0, "locations {:?}", r.locations);
    }

    #[test]
    fn pt_check_real_even_is_zero() {
        let g = Grid::new(-PI, PI, 513).unwrap();
        let v = GridFunction::from_fn(g, |x| (c(x.cos(), 0.0), c(0.0, 0.0)));
        assert!(pt_check(&v).unwrap() < 1e-15);
    }

    #[test]
    fn pt_check_rejects_asymmetric_grid() {
        let g = Grid::new(0.0, PI, 513).unwrap();
        let v = GridFunction::zero(g);
        assert!(matches!(pt_check(&v), Err(SusyError::AsymmetricGrid(_))));
    }

    fn box_seed() -> SeedSpectrum {
        SeedSpectrum::DirichletBox { a: -PI, b: PI }
    }

    fn finite_spec(
        g: Grid,
        u1k: ClosedFormKind,
        u2k: ClosedFormKind,
    ) -> (TransformationSpec, BoundaryProblem) {
        let problem = BoundaryProblem::finite_interval(-PI, PI).unwrap();
        let (u1, a1) = make_closed_form(&u1k, g);
        let (u2, a2) = make_closed_form(&u2k, g);
        (TransformationSpec::NonConfluent { u1, alpha1: a1, u2, alpha2: a2 }, problem)
    }

    #[test]
    fn sine_cos_pair_is_case_c_irreducible() {
        let g = Grid::new(-PI, PI, 4097).unwrap();
        let (spec, problem) = finite_spec(
            g,
            ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 },
            ClosedFormKind::CosKc { k: c(1.0 / 3.0, 0.0), c: c(0.0, 0.4) },
        );
        let v = classify(&spec, &problem, &box_seed()).unwrap();
        assert_eq!(v.case_label, CaseLabel::FinC);
        assert!(v.irreducible);
        assert!(v.real_spectrum);
        assert_eq!(v.prediction.removed, vec![c(1.0, 0.0)]);
        assert!((v.prediction.added[0] - c(1.0 / 9.0, 0.0)).norm() < 1e-12);
        assert!(v.pt_eligible);
    }

    #[test]
    fn opposite_end_pair_is_case_d_isospectral() {
        let g = Grid::new(-PI, PI, 4097).unwrap();
        let a1 = c(1.0, 0.5);
        let (spec, problem) = finite_spec(
            g,
            ClosedFormKind::SinK { k: a1, x0: -PI },
            ClosedFormKind::SinK { k: a1.conj(), x0: PI },
        );
        let v = classify(&spec, &problem, &box_seed()).unwrap();
        assert_eq!(v.case_label, CaseLabel::FinD);
        assert!(v.irreducible);
        assert!(v.real_spectrum);
        assert!(v.prediction.isospectral);
        assert!(v.pt_eligible);
    }

    #[test]
    fn ground_state_chain_is_reducible() {
        // u1 = sin((x+pi)/2) is the ground state of the box.
        let g = Grid::new(-PI, PI, 4097).unwrap();
        let (spec, problem) = finite_spec(
            g,
            ClosedFormKind::SinK { k: c(0.5, 0.0), x0: -PI },
            ClosedFormKind::CosKc { k: c(0.3, 0.0), c: c(0.0, 0.4) },
        );
        let v = classify(&spec, &problem, &box_seed()).unwrap();
        assert_eq!(v.case_label, CaseLabel::FinC);
        assert!(!v.irreducible);
    }

    #[test]
    fn nowhere_vanishing_pair_is_inconsistent_on_finite_interval() {
        let g = Grid::new(-PI, PI, 4097).unwrap();
        let (spec, problem) = finite_spec(
            g,
            ClosedFormKind::CosKc { k: c(0.3, 0.0), c: c(0.0, 0.4) },
            ClosedFormKind::CosKc { k: c(0.7, 0.0), c: c(0.0, -0.3) },
        );
        assert!(matches!(
            classify(&spec, &problem, &box_seed()),
            Err(SusyError::InconsistentSpec(_))
        ));
    }

    #[test]
    fn half_line_decaying_exponential_is_case_b_irreducible() {
        let problem = BoundaryProblem::half_line(15.0).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let (u1, a1) = make_closed_form(&ClosedFormKind::SinK { k: c(1.0, 0.0), x0: 0.0 }, g);
        let (u2, a2) = make_closed_form(&ClosedFormKind::ExpA { a: c(-0.5, 0.5) }, g);
        let spec = TransformationSpec::NonConfluent { u1, alpha1: a1, u2, alpha2: a2 };
        let seed = SeedSpectrum::ContinuumWithDiscrete { threshold: 0.0, discrete: vec![] };
        let v = classify(&spec, &problem, &seed).unwrap();
        assert_eq!(v.case_label, CaseLabel::HlB);
        assert!(v.irreducible);
        assert!(v.real_spectrum);
        assert!(v.flags.contains(&VerdictFlag::ContinuumRemovalUncertain));
    }

    #[test]
    fn whole_line_growing_pair_has_complex_levels_and_is_reducible() {
        let problem = BoundaryProblem::whole_line(15.0).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let a1 = c(1.0, 0.3);
        let a2 = c(1.4, -0.2);
        let (u1, e1) = make_closed_form(&ClosedFormKind::SinhA { a: a1, x0: -0.3 }, g);
        let (u2, e2) = make_closed_form(&ClosedFormKind::SinhA { a: a2, x0: 0.5 }, g);
        let spec = TransformationSpec::NonConfluent { u1, alpha1: e1, u2, alpha2: e2 };
        let seed = SeedSpectrum::ContinuumWithDiscrete { threshold: 0.0, discrete: vec![] };
        let v = classify(&spec, &problem, &seed).unwrap();
        assert_eq!(v.case_label, CaseLabel::WlNonConfluent);
        assert!(!v.irreducible);
        assert!(!v.real_spectrum);
        assert_eq!(v.prediction.complex_levels.len(), 2);
        assert!((v.prediction.complex_levels[0] + a1 * a1).norm() < 1e-12);
    }

    #[test]
    fn whole_line_confluent_with_node_is_irreducible() {
        let problem = BoundaryProblem::whole_line(15.0).unwrap();
        let g = problem.default_grid(4097).unwrap();
        let (u, alpha) = make_closed_form(&ClosedFormKind::SinhA { a: c(0.8, 0.0), x0: 0.0 }, g);
        let spec = TransformationSpec::Confluent { u, alpha, c: c(0.0, 0.4), x_anchor: 0.0 };
        let seed = SeedSpectrum::ContinuumWithDiscrete { threshold: 0.0, discrete: vec![] };
        let v = classify(&spec, &problem, &seed).unwrap();
        assert_eq!(v.case_label, CaseLabel::WlConfluent);
        assert!(v.irreducible);
        assert!(v.real_spectrum);
        assert!((v.prediction.added[0] - c(-0.64, 0.0)).norm() < 1e-12);
        assert!(v.pt_eligible);
    }
}
