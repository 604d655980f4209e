//! Hilbert geometry on properly convex projective domains, together with the
//! projective bending of hyperbolic structures along totally geodesic walls.
//!
//! The crate is organised bottom-up:
//!
//! - [`proj`]: points, hyperplanes and determinant-one maps of the projective
//!   sphere, affine charts, cross-ratios and quadric poles.
//! - [`convex`]: the [`ConvexDomain`] oracle interface and its concrete forms
//!   (ellipsoids, polytopes, bent chamber atlases, tangent ellipsoid pencils).
//! - [`hilbert`]: the Hilbert distance, Finsler norm, Busemann volume and
//!   slim-triangle hyperbolicity estimates on any [`ConvexDomain`].
//! - [`bend`]: bending maps, the cone condition, single-wall folds and the
//!   bent domain / deformed holonomy builder.
//! - [`groups`]: finitely generated representations, element classification,
//!   irreducibility, limit sets and Dirichlet domains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bend;
pub mod convex;
pub mod groups;
pub mod hilbert;
pub mod proj;
pub mod sampling;

pub use bend::{
    bending_map, build_bent_domain, cone_condition, pli, BendError, BendParams, BentBuild, Decomposition,
    WallEnumeration, WallSpec,
};
pub use convex::bent::{BentDomain, Chamber};
pub use convex::{ConvexDomain, DomainError, Membership, PliDomain, Polytope, QuadricDomain, Side};
pub use groups::{
    classify_element, dirichlet_domain, irreducibility_dimension, limit_set_sample, punctured_torus_rep,
    so_q_membership, DirichletDomain, ElementClass, ElementKind, GroupError, Representation, Word,
};
pub use hilbert::{busemann_volume, delta_estimate, HilbertError, MetricContext, Region};
pub use proj::{AffineChart, ProjError, ProjHyperplane, ProjMap, ProjPoint, Tolerances};
