use hb_core::proj::{apply_map, cross_ratio, polar, pole};
use hb_core::{ProjHyperplane, ProjMap, ProjPoint};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn map3() -> impl Strategy<Value = ProjMap> {
    prop::collection::vec(-1.0f64..1.0, 9).prop_filter_map("well conditioned", |v| {
        let m = DMatrix::identity(3, 3) + DMatrix::from_vec(3, 3, v) * 0.6;
        let g = ProjMap::normalized(m).ok()?;
        (g.matrix().amax() < 20.0 && g.inverse().matrix().amax() < 20.0).then_some(g)
    })
}

fn vec3() -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3).prop_filter_map("nonzero", |v| {
        let v = DVector::from_vec(v);
        (v.norm() > 0.1).then_some(v)
    })
}

proptest! {
    #[test]
    fn cross_ratio_is_projectively_invariant(
        a in vec3(),
        b in vec3(),
        s in prop::array::uniform4(-3.0f64..3.0),
        g in map3(),
    ) {
        prop_assume!((a.normalize() - b.normalize()).norm() > 0.1 && (a.normalize() + b.normalize()).norm() > 0.1);
        let mut s = s;
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        prop_assume!(s.windows(2).all(|w| w[1] - w[0] > 0.05));
        let pts: Vec<ProjPoint> = s.iter().map(|t| ProjPoint::new(&a + &b * *t).unwrap()).collect();
        let before = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3], 1e-9).unwrap();
        let img: Vec<ProjPoint> = pts.iter().map(|p| g.apply(p)).collect();
        let after = cross_ratio(&img[0], &img[1], &img[2], &img[3], 1e-9).unwrap();
        prop_assert!((before - after).abs() < 1e-9 * before.abs().max(1.0), "{before} vs {after}");
    }

    #[test]
    fn inverse_composes_to_identity(g in map3()) {
        let id = g.inverse().compose(&g);
        prop_assert!(id.max_abs_diff(&ProjMap::identity(2)) < 1e-9);
        prop_assert!((g.matrix().determinant() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn apply_respects_composition(g in map3(), h in map3(), v in vec3()) {
        let x = ProjPoint::new(v).unwrap();
        let lhs = apply_map(&g.compose(&h), &x);
        let rhs = apply_map(&g, &apply_map(&h, &x));
        prop_assert!(lhs.rep_distance(&rhs) < 1e-9);
    }

    #[test]
    fn hyperplane_images_keep_incidence(g in map3(), v in vec3(), w in vec3()) {
        let x = ProjPoint::new(v).unwrap();
        let h = ProjHyperplane::new(w.clone()).unwrap();
        // move x onto h along w
        let on = ProjPoint::new(x.rep() - &w * (w.dot(x.rep()) / w.norm_squared()));
        prop_assume!(on.is_ok());
        let on = on.unwrap();
        prop_assert!(h.incident(&on, 1e-12));
        let gh = g.apply_hyperplane(&h);
        prop_assert!(gh.pairing(&g.apply(&on)).abs() < 1e-9);
    }

    #[test]
    fn pole_and_polar_are_inverse(w in vec3(), d in prop::array::uniform2(0.5f64..2.0)) {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![d[0], d[1], -1.0]));
        let h = ProjHyperplane::new(w).unwrap();
        let Ok(p) = pole(&h, &q, 1e-9) else { return Ok(()) };
        let back = polar(&p, &q).unwrap();
        prop_assert!(back.approx_eq(&h, 1e-9));
    }

    #[test]
    fn pole_is_equivariant(w in vec3(), g in map3()) {
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let h = ProjHyperplane::new(w).unwrap();
        let Ok(p) = pole(&h, &q, 1e-6) else { return Ok(()) };
        let gi = g.inverse();
        let q_img = gi.matrix().transpose() * &q * gi.matrix();
        let moved = pole(&g.apply_hyperplane(&h), &q_img, 1e-9).unwrap();
        prop_assert!(moved.approx_eq(&g.apply(&p), 1e-9));
    }
}

#[test]
fn canonical_points_ignore_scale() {
    let a = ProjPoint::from_slice(&[1.0, -2.0, 0.5]).unwrap();
    let b = ProjPoint::from_slice(&[-3.0, 6.0, -1.5]).unwrap();
    assert!(a.approx_eq(&b, 1e-12));
    assert!(ProjPoint::from_slice(&[0.0, 0.0, 0.0]).is_err());
}
