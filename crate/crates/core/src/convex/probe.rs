use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::{ConvexDomain, Membership};
use crate::sampling;

/// A pair of boundary points whose midpoint was found on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    /// Distance from the midpoint to the boundary, perpendicular to the chord.
    pub depth: f64,
}

/// Uniform interior point by rejection from the bounding box.
pub fn random_interior<D: ConvexDomain + ?Sized>(domain: &D, r: &mut impl Rng) -> DVector<f64> {
    let (lo, hi) = domain.bounding_box();
    for _ in 0..10_000 {
        let a = sampling::uniform_in_box(r, &lo, &hi);
        if domain.membership(&a) == Membership::Inside {
            return a;
        }
    }
    domain.interior_point()
}

/// Random orthonormal pair spanning a 2-plane.
pub(crate) fn random_frame(r: &mut impl Rng, n: usize) -> (DVector<f64>, DVector<f64>) {
    let e1 = sampling::unit_vector(r, n);
    loop {
        let w = sampling::unit_vector(r, n);
        let w = &w - &e1 * e1.dot(&w);
        if w.norm() > 1e-3 {
            return (e1, w.normalize());
        }
    }
}

fn probe_one<D: ConvexDomain + ?Sized>(domain: &D, r: &mut impl Rng, resolution: f64, tol: f64) -> Option<Violation> {
    let n = domain.dim();
    let c = random_interior(domain, r);
    let (e1, e2) = random_frame(r, n);
    let theta = std::f64::consts::TAU * r.random::<f64>();
    // log-uniform angular gap so that short chords are well represented
    let gap = (resolution.ln() + (-resolution.ln()) * r.random::<f64>()).exp();
    let dir = |a: f64| &e1 * a.cos() + &e2 * a.sin();
    let (u1, u2) = (dir(theta), dir(theta + gap));
    let b1 = &c + &u1 * domain.chord_params(&c, &u1).ok()?.1;
    let b2 = &c + &u2 * domain.chord_params(&c, &u2).ok()?.1;
    let chord = &b2 - &b1;
    let len = chord.norm();
    if len < resolution {
        return None;
    }
    let m = (&b1 + &b2) * 0.5;
    let depth = match domain.membership(&m) {
        Membership::Outside | Membership::OnBoundary => 0.0,
        Membership::Inside => {
            let e = chord / len;
            let out = &m - &c;
            let w = &out - &e * e.dot(&out);
            if w.norm() < 1e-14 {
                return None;
            }
            domain.chord_params(&m, &w.normalize()).ok()?.1
        }
    };
    (depth <= tol).then_some(Violation { a: b1, b: b2, depth })
}

/// Samples pairs of nearby boundary points and reports those whose midpoint
/// sits on the boundary, certifying a flat boundary piece. Pairs closer than
/// `resolution` are skipped.
pub fn strict_convexity_probe<D: ConvexDomain + ?Sized>(
    domain: &D,
    samples: usize,
    seed: u64,
    resolution: f64,
    tol: f64,
) -> Vec<Violation> {
    let chunks: Vec<(u64, usize)> = sampling::chunks(samples).collect();
    chunks
        .par_iter()
        .map(|(idx, count)| {
            let mut r = sampling::stream(seed, *idx);
            (0..*count)
                .filter_map(|_| probe_one(domain, &mut r, resolution, tol))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Number of sampled interior pairs whose chart midpoint is not interior.
pub fn midpoint_violations<D: ConvexDomain + ?Sized>(domain: &D, pairs: usize, seed: u64) -> usize {
    let chunks: Vec<(u64, usize)> = sampling::chunks(pairs).collect();
    chunks
        .par_iter()
        .map(|(idx, count)| {
            let mut r = sampling::stream(seed, *idx);
            (0..*count)
                .filter(|_| {
                    let a = random_interior(domain, &mut r);
                    let b = random_interior(domain, &mut r);
                    domain.membership(&((a + b) * 0.5)) != Membership::Inside
                })
                .count()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{Polytope, QuadricDomain};

    #[test]
    fn disk_has_no_flat_pieces() {
        let d = QuadricDomain::klein(2);
        assert!(strict_convexity_probe(&d, 10_000, 1, 1e-3, 1e-9).is_empty());
    }

    #[test]
    fn square_has_flat_sides() {
        let sq = Polytope::cube(2, 1.0);
        let v = strict_convexity_probe(&sq, 10_000, 1, 1e-3, 1e-9);
        assert!(!v.is_empty());
        let again = strict_convexity_probe(&sq, 10_000, 1, 1e-3, 1e-9);
        assert_eq!(v, again);
    }
}
