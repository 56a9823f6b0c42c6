//! Shared helpers for the integration suites: an eigenvalue oracle that is
//! independent of the QR path (characteristic polynomial by the three-term
//! determinant recursion, roots by Durand-Kerner simultaneous iteration).

use num_complex::Complex64 as C64;

/// det(T - z I) for a symmetric tridiagonal with diagonal `d` and
/// off-diagonal `e`, by the three-term recursion.
pub fn char_poly_value(d: &[C64], e: &[C64], z: C64) -> C64 {
    let n = d.len();
    let mut p_prev = C64::new(1.0, 0.0);
    let mut p = d[0] - z;
    for k in 1..n {
        let next = (d[k] - z) * p - e[k - 1] * e[k - 1] * p_prev;
        p_prev = p;
        p = next;
    }
    p
}

/// All roots of det(T - z I) by Durand-Kerner iteration on the monic
/// polynomial `(-1)^n det(T - z I)`. Intended for small n (the oracle side
/// of the eigensolver cross-check).
pub fn char_poly_roots(d: &[C64], e: &[C64]) -> Vec<C64> {
    let n = d.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![d[0]];
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let monic = |z: C64| char_poly_value(d, e, z) * sign;

    // Starting ring: centred at the diagonal mean, radius past the
    // Gershgorin bound, with an irrational phase offset so no start point
    // is accidentally symmetric.
    let centre = d.iter().sum::<C64>() / n as f64;
    let radius = d
        .iter()
        .enumerate()
        .map(|(i, di)| {
            let mut r = (di - centre).norm();
            if i > 0 {
                r += e[i - 1].norm();
            }
            if i < n - 1 {
                r += e[i].norm();
            }
            r
        })
        .fold(0.0f64, f64::max)
        + 1.0;
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            centre + C64::new(radius * th.cos(), radius * th.sin())
        })
        .collect();

    for _ in 0..600 {
        let mut moved = 0.0f64;
        for k in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                z[k] += C64::new(1e-8, 1e-8);
                continue;
            }
            let step = monic(z[k]) / denom;
            z[k] -= step;
            moved = moved.max(step.norm() / (1.0 + z[k].norm()));
        }
        if moved <= 1e-14 {
            break;
        }
    }
    z
}

/// Greedy multiset pairing: each `found` value consumes its nearest
/// remaining `expected` value; returns the largest pair distance.
pub fn multiset_distance(found: &[C64], expected: &[C64]) -> f64 {
    assert_eq!(found.len(), expected.len());
    let mut remaining: Vec<C64> = expected.to_vec();
    let mut worst = 0.0f64;
    for f in found {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, r)| (i, (f - r).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("non-empty");
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    worst
}
