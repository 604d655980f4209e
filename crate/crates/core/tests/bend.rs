use std::sync::LazyLock;

use hb_core::bend::{bending_matrix, equivariance_residual, trace_separation, RELATION_TOL};
use hb_core::convex::{midpoint_violations, random_interior, strict_convexity_probe};
use hb_core::groups::punctured_torus_wall;
use hb_core::{
    build_bent_domain, punctured_torus_rep, sampling, BendParams, BentBuild, ConvexDomain, Membership, MetricContext,
    ProjMap, Word,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn build(t: f64, depth: usize) -> BentBuild {
    let rho0 = punctured_torus_rep();
    let (base, wall) = punctured_torus_wall();
    let dec = rho0.decomposition().unwrap().clone();
    build_bent_domain(&rho0, &dec, &base, &wall, &BendParams::new(t, depth)).unwrap()
}

static FLAT: LazyLock<BentBuild> = LazyLock::new(|| build(0.0, 6));
static BENT: LazyLock<BentBuild> = LazyLock::new(|| build(0.2, 6));

fn klein(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    ((1.0 - a.dot(b)) / ((1.0 - a.norm_squared()) * (1.0 - b.norm_squared())).sqrt()).acosh()
}

#[test]
fn relations_hold_along_the_deformation() {
    for t in [0.1, 0.2, 0.5, -0.3] {
        let b = build(t, 5);
        assert!(!b.relations.is_empty());
        for (id, res) in &b.relations {
            assert!(*res < RELATION_TOL, "t = {t}, {id}: {res:e}");
        }
    }
}

#[test]
fn stable_letter_pairs_the_cut_curves() {
    let b = &*BENT;
    let w = |s: &str| b.rho_t.eval(&Word::parse(s).unwrap()).unwrap();
    // B⁻¹AB = α⁻¹ γ_d α with α = B and γ_d = A
    let lhs = w("B^-1 A B");
    let rhs = w("B").inverse().compose(&w("A")).compose(&w("B"));
    assert!(lhs.max_abs_diff(&rhs) < 1e-9 * lhs.matrix().amax());
}

#[test]
fn flat_build_is_the_base() {
    let b = &*FLAT;
    let rho0 = punctured_torus_rep();
    for g in rho0.generators() {
        assert_eq!(rho0.image(g).unwrap(), b.rho_t.image(g).unwrap());
    }
    assert_eq!(b.a_t, ProjMap::identity(2));
    for c in b.domain.chambers() {
        assert_eq!(c.map, ProjMap::identity(2));
    }
    let ctx = MetricContext::new(&b.domain);
    let mut r = sampling::rng(3);
    for _ in 0..1000 {
        let x = random_interior(&b.domain, &mut r);
        let y = random_interior(&b.domain, &mut r);
        let d = ctx.distance_affine(&x, &y).unwrap();
        assert!((d - klein(&x, &y)).abs() < 1e-9, "{d} vs {}", klein(&x, &y));
    }
}

#[test]
fn bent_domain_is_convex_and_strictly_so() {
    let b = &*BENT;
    assert_eq!(midpoint_violations(&b.domain, 5000, 4), 0);
    assert!(strict_convexity_probe(&b.domain, 5000, 4, 1e-3, b.domain.tol()).is_empty());
}

#[test]
fn bending_changes_the_domain() {
    let b = &*BENT;
    let (lo, hi) = b.domain.bounding_box();
    assert!(lo.iter().chain(hi.iter()).any(|x| x.abs() > 1.01));
    let (w, sep) = trace_separation(&punctured_torus_rep(), &b.rho_t, 4).unwrap();
    assert!(sep > 1e-3, "{w}: {sep}");
}

#[test]
fn chamber_maps_are_equivariant() {
    let b = &*BENT;
    let (res, checked) = equivariance_residual(b, &punctured_torus_rep(), 3, b.params.depth - 1).unwrap();
    assert!(checked > 0);
    assert!(res < 1e-9, "{res:e}");
}

#[test]
fn adjacent_chambers_agree_on_walls() {
    assert!(BENT.domain.wall_consistency(100) < 1e-7);
    assert_eq!(FLAT.domain.wall_consistency(100), 0.0);
}

#[test]
fn chord_endpoints_lie_on_the_boundary() {
    let d = &BENT.domain;
    let mut r = sampling::rng(8);
    for _ in 0..500 {
        let a = random_interior(d, &mut r);
        let v = sampling::unit_vector(&mut r, 2);
        let (lo, hi) = d.chord_params(&a, &v).unwrap();
        assert!(lo < 0.0 && hi > 0.0);
        for s in [lo, hi] {
            let inner = &a + &v * (s * (1.0 - 1e-6));
            let outer = &a + &v * (s * (1.0 + 1e-6));
            assert_eq!(d.membership(&inner), Membership::Inside);
            assert_ne!(d.membership(&outer), Membership::Inside);
        }
    }
}

#[test]
fn deeper_truncation_only_adds_chambers() {
    let shallow = build(0.2, 3);
    let deep = &*BENT;
    assert!(deep.domain.chambers().len() > shallow.domain.chambers().len());
    let mut r = sampling::rng(12);
    for _ in 0..500 {
        let a = random_interior(&shallow.domain, &mut r);
        if shallow.domain.locate(&a) == 0 {
            assert_eq!(deep.domain.membership(&a), Membership::Inside);
        }
    }
}

fn wall_stabilizer(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let j = DMatrix::from_fn(n, n, |i, k| {
        if i != k {
            0.0
        } else if i + 1 == n {
            -1.0
        } else {
            1.0
        }
    });
    let mut a = DMatrix::zeros(n, n);
    let mut it = entries.iter();
    for i in 0..n {
        for k in i + 1..n {
            let x = *it.next().unwrap();
            a[(i, k)] = x;
            a[(k, i)] = -x;
        }
    }
    let mut h = DMatrix::identity(n + 1, n + 1);
    h.view_mut((1, 1), (n, n)).copy_from(&(a * &j).exp());
    h
}

proptest! {
    #[test]
    fn bending_maps_form_a_one_parameter_group(
        nu in prop::collection::vec(-1.0f64..1.0, 3),
        p in prop::collection::vec(-1.0f64..1.0, 3),
        s in -1.0f64..1.0,
        t in -1.0f64..1.0,
    ) {
        let nu = DVector::from_vec(nu);
        let p = DVector::from_vec(p);
        prop_assume!(nu.dot(&p).abs() > 0.2);
        let lhs = bending_matrix(&nu, &p, s) * bending_matrix(&nu, &p, t);
        let rhs = bending_matrix(&nu, &p, s + t);
        prop_assert!((lhs - &rhs).amax() < 1e-9 * rhs.amax().max(1.0));
        prop_assert!((bending_matrix(&nu, &p, s).determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bending_fixes_the_wall_pointwise(
        nu in prop::collection::vec(-1.0f64..1.0, 3),
        p in prop::collection::vec(-1.0f64..1.0, 3),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        t in -2.0f64..2.0,
    ) {
        let nu = DVector::from_vec(nu);
        let p = DVector::from_vec(p);
        prop_assume!(nu.dot(&p).abs() > 0.2 && nu.norm() > 0.2);
        let x = DVector::from_vec(x);
        let on = &x - &nu * (nu.dot(&x) / nu.norm_squared());
        let image = bending_matrix(&nu, &p, t) * &on;
        // a fixed direction is scaled by e^{-t}
        prop_assert!((image - &on * (-t).exp()).amax() < 1e-12 * (1.0 + (-t).exp()));
    }

    #[test]
    fn diagonal_bending_centralizes_the_wall_stabilizer(
        n in 2usize..=4,
        entries in prop::collection::vec(-1.0f64..1.0, 6),
        t in prop::sample::select(vec![0.1, 1.0]),
    ) {
        let mut e1 = DVector::zeros(n + 1);
        e1[0] = 1.0;
        let a = bending_matrix(&e1, &e1, t);
        let h = wall_stabilizer(n, &entries);
        prop_assert!((&a * &h - &h * &a).amax() < 1e-12);
    }
}
