//! Properly convex domains exposed through containment and chord oracles.
//!
//! Every domain lives in a fixed affine chart in which its closure is bounded.
//! The oracles take affine coordinates in that chart; the projective wrappers
//! [`ConvexDomain::contains`] and [`ConvexDomain::ray_boundary`] project first.

pub mod bent;
mod pli;
mod polytope;
mod probe;
mod quadric;

use nalgebra::DVector;
use thiserror::Error;

use crate::proj::{AffineChart, ProjError, ProjPoint};

pub use pli::PliDomain;
pub use polytope::Polytope;
pub use probe::{midpoint_violations, random_interior, strict_convexity_probe, Violation};
pub use quadric::{inner_pencil_member, pencil_ellipsoid, QuadricDomain};

/// Result of a containment query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Membership {
    Inside,
    OnBoundary,
    Outside,
}

impl Membership {
    pub fn is_inside(self) -> bool {
        self == Membership::Inside
    }
}

/// Which open half of the complement of a hyperplane is meant: the one where
/// the covector is negative or the one where it is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Negative,
    Positive,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Negative => -1.0,
            Side::Positive => 1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Negative => Side::Positive,
            Side::Positive => Side::Negative,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("point is not interior to the domain")]
    NotInterior,
    #[error("bisection failed to bracket the boundary")]
    NumericalFailure,
    #[error("domain is not bounded in its chart")]
    Unbounded,
    #[error("domain has empty interior")]
    EmptyInterior,
    #[error("quadratic form has signature ({pos},{neg}), expected ({expected},1)")]
    SignatureMismatch { pos: usize, neg: usize, expected: usize },
    #[error("pencil member lost signature (n,1)")]
    SignatureLost,
    #[error("point is not on the boundary")]
    NotOnBoundary,
    #[error("no pencil member in the searched range lies in the domain")]
    NotContained,
    #[error("zero direction")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Proj(#[from] ProjError),
}

/// A properly convex open set, seen through its oracles in an affine chart.
pub trait ConvexDomain: Send + Sync {
    /// Dimension `n` of the ambient projective space.
    fn dim(&self) -> usize;

    /// Chart whose affine part contains the closure of the domain.
    fn chart(&self) -> &AffineChart;

    /// Containment of an affine point, with a tolerance band on the boundary.
    fn membership(&self, a: &DVector<f64>) -> Membership;

    /// Parameters `(s⁻, s⁺)`, `s⁻ < 0 < s⁺`, such that `a + s·v` lies on the
    /// boundary. `a` must be interior and `v` nonzero.
    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError>;

    fn interior_point(&self) -> DVector<f64>;

    /// Axis-aligned box containing the closure.
    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>);

    /// Width of the on-boundary band.
    fn tol(&self) -> f64 {
        1e-9
    }

    fn contains(&self, x: &ProjPoint) -> Membership {
        match self.chart().project(x, 1e-12) {
            Ok(a) => self.membership(&a),
            Err(_) => Membership::Outside,
        }
    }

    /// The two boundary points of the chord through `x` with chart direction `v`,
    /// backward point first.
    fn ray_boundary(&self, x: &ProjPoint, v: &DVector<f64>) -> Result<(ProjPoint, ProjPoint), DomainError> {
        let a = self.chart().project(x, 1e-12)?;
        if self.membership(&a) != Membership::Inside {
            return Err(DomainError::NotInterior);
        }
        let (lo, hi) = self.chord_params(&a, v)?;
        let chart = self.chart();
        Ok((chart.embed(&(&a + v * lo)), chart.embed(&(&a + v * hi))))
    }
}

impl<D: ConvexDomain + ?Sized> ConvexDomain for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn chart(&self) -> &AffineChart {
        (**self).chart()
    }
    fn membership(&self, a: &DVector<f64>) -> Membership {
        (**self).membership(a)
    }
    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        (**self).chord_params(a, v)
    }
    fn interior_point(&self) -> DVector<f64> {
        (**self).interior_point()
    }
    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (**self).bounding_box()
    }
    fn tol(&self) -> f64 {
        (**self).tol()
    }
}

impl<D: ConvexDomain + ?Sized> ConvexDomain for Box<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn chart(&self) -> &AffineChart {
        (**self).chart()
    }
    fn membership(&self, a: &DVector<f64>) -> Membership {
        (**self).membership(a)
    }
    fn chord_params(&self, a: &DVector<f64>, v: &DVector<f64>) -> Result<(f64, f64), DomainError> {
        (**self).chord_params(a, v)
    }
    fn interior_point(&self) -> DVector<f64> {
        (**self).interior_point()
    }
    fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        (**self).bounding_box()
    }
    fn tol(&self) -> f64 {
        (**self).tol()
    }
}

pub const BISECTION_ITERS: usize = 80;

/// Forward boundary parameter along `a + s·v` located by bisection on the
/// membership oracle. The bracket starts at `hint` and doubles until it leaves
/// the domain.
pub fn bisect_exit<D: ConvexDomain + ?Sized>(
    domain: &D,
    a: &DVector<f64>,
    v: &DVector<f64>,
    hint: f64,
) -> Result<f64, DomainError> {
    let mut lo = 0.0;
    let mut hi = hint.max(1e-6);
    let mut grown = 0;
    while domain.membership(&(a + v * hi)) == Membership::Inside {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 60 {
            return Err(DomainError::NumericalFailure);
        }
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if domain.membership(&(a + v * mid)) == Membership::Inside {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub(crate) fn check_dir(v: &DVector<f64>, n: usize) -> Result<(), DomainError> {
    if v.len() != n {
        return Err(DomainError::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    if !(v.norm() > 0.0) {
        return Err(DomainError::ZeroVector);
    }
    Ok(())
}
