//! Independent spectral verification: finite-difference discretisation of
//! complex potentials under Dirichlet conditions, a complex-symmetric
//! tridiagonal QR eigensolver, shooting refinement, and comparison against
//! spectrum predictions.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SusyError};
use crate::grid::{Energy, GridFunction};
use crate::ivp;
use crate::problem::BoundaryProblem;

/// Discretised `-d²/dx² + V` with Dirichlet rows eliminated: complex
/// symmetric, equal sub- and super-diagonals.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    pub n: usize,
    /// `2/h² + V(x_i)` at the interior nodes.
    pub diag: Vec<C64>,
    /// The constant off-diagonal `-1/h²`.
    pub off: f64,
    pub h: f64,
    pub problem: BoundaryProblem,
}

/// Three-point discretisation of the problem on `n` interior nodes,
/// resampling `V` by cubic interpolation when the grids differ.
pub fn discretize(
    v: &GridFunction,
    problem: &BoundaryProblem,
    n: usize,
) -> Result<TridiagonalOperator> {
    if n < 16 {
        return Err(SusyError::InvalidInput(format!("need n >= 16 interior nodes, got {n}")));
    }
    let h = (problem.b - problem.a) / (n + 1) as f64;
    let mut diag = Vec::with_capacity(n);
    for i in 1..=n {
        let x = problem.a + h * i as f64;
        let vx = match v.grid.index_of(x) {
            Some(j) => {
                let val = v.values[j];
                if !(val.re.is_finite() && val.im.is_finite()) {
                    return Err(SusyError::ResampleError(format!(
                        "potential is flagged singular at x = {x}"
                    )));
                }
                val
            }
            None => v.interp(x)?,
        };
        diag.push(C64::new(2.0 / (h * h), 0.0) + vx);
    }
    Ok(TridiagonalOperator { n, diag, off: -1.0 / (h * h), h, problem: *problem })
}

impl TridiagonalOperator {
    /// All eigenvalues, sorted by real part.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let off = vec![C64::new(self.off, 0.0); self.n.saturating_sub(1)];
        eig_complex_symmetric_tridiagonal(&self.diag, &off)
    }
}

/// Convenience wrapper matching the operator type.
pub fn eig_complex_tridiagonal(t: &TridiagonalOperator) -> Result<Vec<C64>> {
    t.eigenvalues()
}

const MAX_QR_ITER: usize = 100;

/// All eigenvalues of a complex-symmetric tridiagonal matrix by implicit
/// single-shift QR iteration (Wilkinson-style shift in complex arithmetic,
/// deflation when a subdiagonal drops below `eps (|d_i| + |d_{i+1}|)`).
///
/// The bulge chase uses complex-orthogonal rotations, which preserve the
/// complex-symmetric tridiagonal form, so a sweep is O(n) on tridiagonal
/// storage. A rotation with `x² + z² ≈ 0` (possible in complex arithmetic)
/// aborts the sweep; the active block is restored and retried with a
/// perturbed shift. Real input stays exactly real throughout.
///
/// Returns the eigenvalues sorted by real part (ties by imaginary part).
pub fn eig_complex_symmetric_tridiagonal(diag: &[C64], off: &[C64]) -> Result<Vec<C64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(SusyError::InvalidInput(format!(
            "off-diagonal length {} does not match dimension {}",
            off.len(),
            n
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();

    let mut hi = n - 1;
    let mut iters = 0usize;
    let mut retries = 0usize;
    loop {
        // Deflate converged tail entries.
        while hi > 0 && negligible(e[hi - 1], d[hi - 1], d[hi]) {
            e[hi - 1] = C64::new(0.0, 0.0);
            hi -= 1;
            iters = 0;
        }
        if hi == 0 {
            break;
        }
        // Active block [lo, hi].
        let mut lo = hi;
        while lo > 0 && !negligible(e[lo - 1], d[lo - 1], d[lo]) {
            lo -= 1;
        }
        if lo == hi - 1 {
            // 2x2 block: closed form.
            let (l1, l2) = eig2(d[lo], e[lo], d[hi]);
            d[lo] = l1;
            d[hi] = l2;
            e[lo] = C64::new(0.0, 0.0);
            hi = lo;
            iters = 0;
            continue;
        }
        iters += 1;
        if iters > MAX_QR_ITER {
            return Err(SusyError::NoConvergence(format!(
                "eigenvalue {hi} needed more than {MAX_QR_ITER} QR iterations"
            )));
        }
        let mut shift = if iters % 14 == 0 {
            // Exceptional shift against rare shift cycles.
            d[hi] + e[hi - 1] * C64::new(0.9, 0.4)
        } else {
            wilkinson_shift(d[hi - 1], e[hi - 1], d[hi])
        };
        if retries > 0 {
            let t = retries as f64;
            shift += e[hi - 1] * C64::new(0.3 * t, 0.21 * t);
        }
        let d_save = d[lo..=hi].to_vec();
        let e_save = e[lo..hi].to_vec();
        match qr_sweep(&mut d, &mut e, lo, hi, shift) {
            Ok(()) => {
                retries = 0;
            }
            Err(()) => {
                d[lo..=hi].copy_from_slice(&d_save);
                e[lo..hi].copy_from_slice(&e_save);
                retries += 1;
                if retries > 8 {
                    return Err(SusyError::NoConvergence(
                        "rotation breakdown persisted across perturbed shifts".into(),
                    ));
                }
            }
        }
    }
    d.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(d)
}

fn negligible(e: C64, d1: C64, d2: C64) -> bool {
    e.norm() <= f64::EPSILON * (d1.norm() + d2.norm())
}

/// Eigenvalue of the trailing 2x2 `[[a, b], [b, c]]` closer to `c`.
fn wilkinson_shift(a: C64, b: C64, c: C64) -> C64 {
    let delta = (a - c) * 0.5;
    let disc = (delta * delta + b * b).sqrt();
    // Pick the sign that avoids cancellation in the denominator.
    let denom = if (delta + disc).norm() >= (delta - disc).norm() {
        delta + disc
    } else {
        delta - disc
    };
    if denom.norm() <= f64::MIN_POSITIVE {
        return c - b;
    }
    c - b * b / denom
}

/// Closed-form eigenvalues of `[[a, b], [b, c]]`.
fn eig2(a: C64, b: C64, c: C64) -> (C64, C64) {
    let half_tr = (a + c) * 0.5;
    let delta = (a - c) * 0.5;
    let disc = (delta * delta + b * b).sqrt();
    (half_tr + disc, half_tr - disc)
}

/// One implicit-shift QR sweep on the active block `[lo, hi]`. Errors on a
/// near-isotropic rotation (x² + z² ≈ 0) without touching further state;
/// the caller restores the block.
fn qr_sweep(d: &mut [C64], e: &mut [C64], lo: usize, hi: usize, shift: C64) -> std::result::Result<(), ()> {
    let mut x = d[lo] - shift;
    let mut z = e[lo];
    for k in lo..hi {
        let r2 = x * x + z * z;
        let mag = x.norm_sqr() + z.norm_sqr();
        if r2.norm() < 1e-12 * mag || mag == 0.0 {
            return Err(());
        }
        let r = r2.sqrt();
        let c = x / r;
        let s = z / r;
        if k > lo {
            e[k - 1] = r;
        }
        let a = d[k];
        let b = d[k + 1];
        let beta = e[k];
        let cs = c * s;
        let c2 = c * c;
        let s2 = s * s;
        d[k] = c2 * a + cs * beta * 2.0 + s2 * b;
        d[k + 1] = s2 * a - cs * beta * 2.0 + c2 * b;
        e[k] = cs * (b - a) + (c2 - s2) * beta;
        if k + 1 < hi {
            let delta = e[k + 1];
            x = e[k];
            z = s * delta;
            e[k + 1] = c * delta;
        }
    }
    Ok(())
}

/// Integrate from `a` with `u(a) = 0, u'(a) = 1` and return `u(b)` scaled
/// by the running maximum of |u|; the result vanishes exactly when `E` is
/// a Dirichlet eigenvalue of the truncated problem.
pub fn shoot_mismatch(v: &GridFunction, e: Energy, problem: &BoundaryProblem) -> Result<C64> {
    let _ = problem;
    let grid = v.grid;
    let n = grid.n;
    let h = grid.spacing();
    let vmid = shooting_midpoints(v)?;
    let mut u = C64::new(0.0, 0.0);
    let mut p = C64::new(1.0, 0.0);
    let mut running_max = 0.0f64;
    for i in 0..n - 1 {
        let (nu, np) = rk4_pair(u, p, v.values[i], vmid[i], v.values[i + 1], e.0, h);
        u = nu;
        p = np;
        running_max = running_max.max(u.norm());
        // Renormalise every 50 steps; only the relative mismatch matters.
        if i % 50 == 49 {
            let m = u.norm().max(p.norm());
            if m > 1e120 {
                return Err(SusyError::Overflow { x: grid.node(i + 1), cap: ivp::OVERFLOW_CAP });
            }
            if m > 1e50 {
                u /= m;
                p /= m;
                running_max = (running_max / m).max(u.norm());
            }
        }
    }
    if running_max == 0.0 {
        return Ok(u);
    }
    Ok(u / running_max)
}

fn shooting_midpoints(v: &GridFunction) -> Result<Vec<C64>> {
    if !v.flagged_nodes().is_empty() {
        return Err(SusyError::InvalidInput(
            "potential carries flagged singular nodes; shooting needs a regular potential".into(),
        ));
    }
    Ok(ivp::midpoints(&v.values))
}

#[inline]
fn rk4_pair(u: C64, p: C64, v0: C64, vm: C64, v1: C64, e: C64, h: f64) -> (C64, C64) {
    let f = |u: C64, p: C64, v: C64| (p, (v - e) * u);
    let (k1u, k1p) = f(u, p, v0);
    let (k2u, k2p) = f(u + k1u * (h / 2.0), p + k1p * (h / 2.0), vm);
    let (k3u, k3p) = f(u + k2u * (h / 2.0), p + k2p * (h / 2.0), vm);
    let (k4u, k4p) = f(u + k3u * h, p + k3p * h, v1);
    (
        u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0),
        p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0),
    )
}

/// Left/right one-directional integration up to the middle node, with
/// periodic renormalization; returns `(u, u')` at the matching point.
fn shoot_to_middle(
    v: &GridFunction,
    e: Energy,
    from_left: bool,
) -> Result<(C64, C64)> {
    let grid = v.grid;
    let n = grid.n;
    let mid = n / 2;
    let h = grid.spacing();
    let vmid = shooting_midpoints(v)?;
    let mut u = C64::new(0.0, 0.0);
    let mut p = C64::new(1.0, 0.0);
    let mut steps = 0usize;
    let mut range: Box<dyn Iterator<Item = usize>> = if from_left {
        Box::new(0..mid)
    } else {
        Box::new((mid..n - 1).rev())
    };
    let sign = if from_left { 1.0 } else { -1.0 };
    loop {
        let Some(i) = range.next() else { break };
        let (a, b) = if from_left { (i, i + 1) } else { (i + 1, i) };
        let (nu, np) = rk4_pair(u, p, v.values[a], vmid[i], v.values[b], e.0, sign * h);
        u = nu;
        p = np;
        steps += 1;
        if steps % 50 == 0 {
            let m = u.norm().max(p.norm());
            if m > 1e120 {
                return Err(SusyError::Overflow { x: grid.node(b), cap: ivp::OVERFLOW_CAP });
            }
            if m > 1e20 {
                u /= m;
                p /= m;
            }
        }
    }
    Ok((u, p))
}

/// Stiffness-robust eigenvalue condition: the Wronskian of the solutions
/// shot from both ends, evaluated at the middle node and scaled by the
/// cancellation magnitude. Vanishes exactly at Dirichlet eigenvalues of
/// the truncated problem but, unlike the one-sided boundary mismatch, does
/// not saturate when the solution grows by more digits than f64 carries.
fn matched_mismatch(v: &GridFunction, e: Energy, problem: &BoundaryProblem) -> Result<C64> {
    let _ = problem;
    let (ul, dul) = shoot_to_middle(v, e, true)?;
    let (ur, dur) = shoot_to_middle(v, e, false)?;
    let w = ul * dur - dul * ur;
    let scale = (ul * dur).norm() + (dul * ur).norm();
    if scale == 0.0 {
        return Ok(w);
    }
    Ok(w / scale)
}

fn secant<F: FnMut(C64) -> Result<C64>>(guess: C64, mut f: F) -> Result<C64> {
    let mut e0 = guess;
    let mut e1 = e0 + C64::new(1e-4 * (1.0 + e0.norm()), 1e-6);
    let mut f0 = f(e0)?;
    let mut f1 = f(e1)?;
    for _ in 0..50 {
        let df = f1 - f0;
        if df.norm() == 0.0 {
            return Err(SusyError::NoConvergence(
                "secant stalled: mismatch difference vanished".into(),
            ));
        }
        let e2 = e1 - f1 * (e1 - e0) / df;
        if !(e2.re.is_finite() && e2.im.is_finite()) {
            return Err(SusyError::NoConvergence("secant produced a non-finite energy".into()));
        }
        let step = (e2 - e1).norm();
        e0 = e1;
        f0 = f1;
        e1 = e2;
        if step <= 1e-10 * (1.0 + e1.norm()) {
            return Ok(e1);
        }
        f1 = f(e1)?;
    }
    Err(SusyError::NoConvergence("secant exceeded 50 iterations".into()))
}

/// Polish an eigenvalue guess by complex secant iteration on the shooting
/// mismatch; converged when `|ΔE| <= 1e-10 (1 + |E|)`.
///
/// When the boundary mismatch saturates (two-sided exponential growth
/// leaves no magnitude signal at the far end) the secant is retried on the
/// matched bidirectional mismatch, which has the same roots.
pub fn refine_eigenvalue(
    v: &GridFunction,
    e_guess: Energy,
    problem: &BoundaryProblem,
) -> Result<Energy> {
    match secant(e_guess.0, |e| shoot_mismatch(v, Energy(e), problem)) {
        Ok(e) => Ok(Energy(e)),
        Err(SusyError::NoConvergence(_)) => {
            let e = secant(e_guess.0, |z| matched_mismatch(v, Energy(z), problem))?;
            Ok(Energy(e))
        }
        Err(other) => Err(other),
    }
}

/// Symbolic or numeric description of a seed spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpectrum {
    /// Dirichlet levels of the zero potential on `[a, b]`:
    /// `(k π / (b-a))²`, `k >= 1`.
    DirichletBox { a: f64, b: f64 },
    /// An explicit list of discrete levels.
    Discrete {
        #[serde(with = "crate::io::complex_array_vec")]
        levels: Vec<C64>,
    },
    /// Continuous spectrum above a threshold plus finitely many discrete
    /// levels below it.
    ContinuumWithDiscrete {
        threshold: f64,
        #[serde(with = "crate::io::complex_array_vec")]
        discrete: Vec<C64>,
    },
}

impl SeedSpectrum {
    /// The lowest `k` discrete levels this description asserts. Continuum
    /// ladders of a truncated box are not rendered.
    pub fn render(&self, k: usize) -> Vec<C64> {
        match self {
            SeedSpectrum::DirichletBox { a, b } => {
                let w = b - a;
                (1..=k)
                    .map(|m| {
                        let kk = m as f64 * std::f64::consts::PI / w;
                        C64::new(kk * kk, 0.0)
                    })
                    .collect()
            }
            SeedSpectrum::Discrete { levels } => levels.iter().take(k).cloned().collect(),
            SeedSpectrum::ContinuumWithDiscrete { discrete, .. } => {
                discrete.iter().take(k).cloned().collect()
            }
        }
    }

    /// Index of the level matching `e` within `tol`, rendering as many
    /// levels as needed to pass `|e|`.
    pub fn index_of(&self, e: C64, tol: f64) -> Option<usize> {
        let mut k = 8;
        loop {
            let levels = self.render(k);
            for (i, l) in levels.iter().enumerate() {
                if (l - e).norm() <= tol {
                    return Some(i);
                }
            }
            let exhausted = levels.len() < k
                || levels.last().map(|l| l.re > e.re + 1.0 + tol).unwrap_or(true);
            if exhausted {
                return None;
            }
            k *= 2;
            if k > 1 << 20 {
                return None;
            }
        }
    }
}

/// What a transformation is predicted to do to the seed spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumPrediction {
    pub base: SeedSpectrum,
    #[serde(with = "crate::io::complex_array_vec")]
    pub removed: Vec<C64>,
    #[serde(with = "crate::io::complex_array_vec")]
    pub added: Vec<C64>,
    #[serde(with = "crate::io::complex_array_vec")]
    pub complex_levels: Vec<C64>,
    /// `(energy, lies inside the continuous spectrum)`.
    pub embedded_flags: Vec<(Energy, bool)>,
    #[serde(with = "crate::io::complex_array_vec")]
    pub spectral_singularity_candidates: Vec<C64>,
    pub isospectral: bool,
}

impl SpectrumPrediction {
    pub fn isospectral(base: SeedSpectrum) -> Self {
        SpectrumPrediction {
            base,
            removed: Vec::new(),
            added: Vec::new(),
            complex_levels: Vec::new(),
            embedded_flags: Vec::new(),
            spectral_singularity_candidates: Vec::new(),
            isospectral: true,
        }
    }

    pub fn modified(base: SeedSpectrum) -> Self {
        SpectrumPrediction { isospectral: false, ..SpectrumPrediction::isospectral(base) }
    }

    /// The lowest `k` predicted discrete levels (by real part): base levels
    /// minus `removed`, plus `added` and `complex_levels`.
    pub fn expected_levels(&self, k: usize) -> Vec<C64> {
        let mut levels: Vec<C64> = self
            .base
            .render(k + self.removed.len())
            .into_iter()
            .filter(|l| !self.removed.iter().any(|r| (l - r).norm() <= 1e-9 * (1.0 + l.norm())))
            .collect();
        levels.extend(self.added.iter().cloned());
        levels.extend(self.complex_levels.iter().cloned());
        levels.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
        levels.truncate(k);
        levels
    }
}

/// Result of pairing computed eigenvalues against a prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(with = "crate::io::complex_array_vec")]
    pub eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
    /// `(expected, found, |expected - found|)` per matched pair.
    pub matched: Vec<MatchedLevel>,
    #[serde(with = "crate::io::complex_array_vec")]
    pub unmatched_expected: Vec<C64>,
    #[serde(with = "crate::io::complex_array_vec")]
    pub unmatched_found: Vec<C64>,
    /// True when every matched imaginary part is below the tolerance.
    pub real_spectrum_confirmed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchedLevel {
    #[serde(with = "crate::io::complex_array")]
    pub expected: C64,
    #[serde(with = "crate::io::complex_array")]
    pub found: C64,
    pub error: f64,
}

/// Greedy nearest-neighbour pairing of the `k` lowest-real-part eigenvalues
/// against the prediction. `residuals` may be empty or per-eigenvalue.
pub fn compare_spectra(
    found: &[C64],
    residuals: &[f64],
    prediction: &SpectrumPrediction,
    k: usize,
    tol: f64,
) -> SpectrumReport {
    let mut eigenvalues: Vec<C64> = found.to_vec();
    eigenvalues.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal));
    eigenvalues.truncate(k);
    let expected = prediction.expected_levels(k.min(eigenvalues.len()).max(1));

    let mut remaining: Vec<C64> = eigenvalues.clone();
    let mut matched = Vec::new();
    let mut unmatched_expected = Vec::new();
    for &want in &expected {
        let best = remaining
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - want)
                    .norm()
                    .partial_cmp(&(*b - want).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|(i, z)| (i, *z));
        match best {
            Some((i, z)) if (z - want).norm() <= tol => {
                matched.push(MatchedLevel { expected: want, found: z, error: (z - want).norm() });
                remaining.remove(i);
            }
            _ => unmatched_expected.push(want),
        }
    }
    let real_spectrum_confirmed = matched.iter().all(|m| m.found.im.abs() <= tol);
    SpectrumReport {
        eigenvalues,
        residuals: residuals.to_vec(),
        matched,
        unmatched_expected,
        unmatched_found: remaining,
        real_spectrum_confirmed,
    }
}

/// Keep only the levels that move by at most `tol` when the truncation is
/// doubled; separates genuine discrete levels (including complex ones)
/// from box states of the truncated continuum.
pub fn stability_filter(levels_l: &[C64], levels_2l: &[C64], tol: f64) -> Vec<C64> {
    levels_l
        .iter()
        .filter(|&&z| levels_2l.iter().any(|&w| (z - w).norm() <= tol))
        .cloned()
        .collect()
}

/// Max residual of the partner equation over mapped seed solutions at the
/// sample energies: builds `ψ_E` on the seed potential, maps it through the
/// transformation, and applies the 5-point stencil check against `V1`.
///
/// Stencil windows containing potential values beyond what the grid can
/// resolve (see [`crate::grid::stencil_resolution_cap`]) are excluded; the
/// second return value counts them so callers can demand zero masking.
pub fn intertwining_residual_detailed(
    v0: &GridFunction,
    result: &crate::darboux::TransformResult,
    e_samples: &[Energy],
) -> Result<(f64, usize)> {
    let grid = v0.grid;
    let mid = grid.node(grid.n / 2);
    let cap = crate::grid::stencil_resolution_cap(grid.spacing(), 1e-6);
    let mut worst = 0.0f64;
    let mut masked = 0usize;
    for &e in e_samples {
        let psi = ivp::solve_ivp(v0, e, mid, C64::new(1.0, 0.0), C64::new(0.3, 0.4))?;
        let phi = crate::darboux::second_order_map(&psi, e, &result.spec, &result.w)?;
        let (r, m) =
            crate::grid::schrodinger_residual_capped(&phi, &result.v1, e, Some(cap))?;
        worst = worst.max(r);
        masked = masked.max(m);
    }
    Ok((worst, masked))
}

/// [`intertwining_residual_detailed`] without the masking count.
pub fn intertwining_residual(
    v0: &GridFunction,
    result: &crate::darboux::TransformResult,
    e_samples: &[Energy],
) -> Result<f64> {
    intertwining_residual_detailed(v0, result, e_samples).map(|(r, _)| r)
}

/// Tail behaviour of a (supposed) bound state on a truncated unbounded
/// domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    /// True when the outer-half cumulative norm grows sublinearly and the
    /// envelope fits `C / x^p` with `p > 1/2`.
    pub square_integrable: bool,
    /// Fitted decay exponent of the envelope.
    pub decay_exponent: f64,
    /// Ratio of the outer-quarter to inner-quarter contribution to the
    /// cumulative norm over the outer half.
    pub growth_ratio: f64,
}

/// Decide square integrability of `phi` on an unbounded problem from its
/// truncated samples: cumulative `∫ |φ|²` over the outer half must grow
/// sublinearly, and the envelope of |φ| must fit `C/x^p` with `p > 1/2` by
/// log-log regression over windowed maxima.
pub fn l2_tail_check(phi: &GridFunction, problem: &BoundaryProblem) -> Result<TailReport> {
    if matches!(problem.kind, crate::problem::ProblemKind::FiniteInterval) {
        return Err(SusyError::InvalidInput(
            "tail check applies to the truncated unbounded problems".into(),
        ));
    }
    let n = phi.n();
    let h = phi.grid.spacing();
    let half = n / 2;
    let sq: Vec<C64> = phi.values[half..]
        .iter()
        .map(|z| C64::new(z.norm_sqr(), 0.0))
        .collect();
    let cum = crate::grid::cumulative_integral(&sq, h);
    let m = cum.len();
    let total = cum[m - 1].re;
    if total <= 0.0 {
        return Ok(TailReport { square_integrable: true, decay_exponent: f64::INFINITY, growth_ratio: 0.0 });
    }
    let inner = cum[m / 2].re;
    let outer = total - inner;
    let growth_ratio = if inner > 0.0 { outer / inner } else { f64::INFINITY };

    if growth_ratio >= 0.95 {
        return Ok(TailReport { square_integrable: false, decay_exponent: 0.0, growth_ratio });
    }
    if growth_ratio > 0.80 {
        return Err(SusyError::AmbiguousAsymptotics(format!(
            "outer-half growth ratio {growth_ratio:.3} sits between sublinear and linear; increase L"
        )));
    }

    // Envelope regression over windowed maxima of |φ| on the outer half.
    let window = (n / 64).max(16);
    let mut xs = Vec::new();
    let mut ms = Vec::new();
    let mut i = half;
    while i + window <= n {
        let mut best = 0.0f64;
        let mut best_x = phi.grid.node(i);
        for j in i..i + window {
            let a = phi.values[j].norm();
            if a > best {
                best = a;
                best_x = phi.grid.node(j);
            }
        }
        if best > 1e-280 && best_x.abs() > 1e-12 {
            xs.push(best_x.abs().ln());
            ms.push(best.ln());
        }
        i += window;
    }
    if xs.len() < 4 {
        return Err(SusyError::AmbiguousAsymptotics(
            "too few envelope windows for the tail regression; refine the grid".into(),
        ));
    }
    let slope = least_squares_slope(&xs, &ms);
    let p = -slope;
    Ok(TailReport { square_integrable: p > 0.5, decay_exponent: p, growth_ratio })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    sxy / sxx
}
