use hb_core::convex::random_interior;
use hb_core::hilbert::chord_distance;
use hb_core::{sampling, AffineChart, ConvexDomain, MetricContext, Polytope, ProjMap, QuadricDomain};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn disk_point() -> impl Strategy<Value = DVector<f64>> {
    (0.0f64..std::f64::consts::TAU, 0.0f64..0.97).prop_map(|(a, r)| DVector::from_vec(vec![r * a.cos(), r * a.sin()]))
}

fn square_point() -> impl Strategy<Value = DVector<f64>> {
    prop::array::uniform2(-0.97f64..0.97).prop_map(|a| DVector::from_vec(a.to_vec()))
}

proptest! {
    #[test]
    fn disk_distance_is_a_metric(a in disk_point(), b in disk_point(), c in disk_point()) {
        let e = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&e);
        let d = |x: &DVector<f64>, y: &DVector<f64>| ctx.distance_affine(x, y).unwrap();
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-9);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        prop_assert_eq!(d(&a, &a), 0.0);
    }

    #[test]
    fn square_distance_is_a_metric(a in square_point(), b in square_point(), c in square_point()) {
        let sq = Polytope::cube(2, 1.0);
        let ctx = MetricContext::new(&sq);
        let d = |x: &DVector<f64>, y: &DVector<f64>| ctx.distance_affine(x, y).unwrap();
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-9);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn finsler_norm_is_homogeneous(a in disk_point(), dir in 0.0f64..6.3, lam in 0.01f64..50.0) {
        let e = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&e);
        let v = DVector::from_vec(vec![dir.cos(), dir.sin()]);
        let f = ctx.finsler_norm_affine(&a, &v).unwrap();
        let g = ctx.finsler_norm_affine(&a, &(&v * lam)).unwrap();
        prop_assert!((g - lam * f).abs() < 1e-9 * lam * f);
    }

    #[test]
    fn isometries_of_the_disk_preserve_distance(a in disk_point(), b in disk_point(), word in prop::collection::vec(0usize..4, 1..5)) {
        let e = QuadricDomain::klein(2);
        let ctx = MetricContext::new(&e);
        let rho = hb_core::punctured_torus_rep();
        let letters = ["A", "B", "A^-1", "B^-1"];
        let w = hb_core::Word::parse(&word.iter().map(|i| letters[*i]).collect::<Vec<_>>().join(" ")).unwrap();
        let g = rho.eval(&w).unwrap();
        let x = e.chart().embed(&a);
        let y = e.chart().embed(&b);
        let d0 = ctx.distance(&x, &y).unwrap();
        let d1 = ctx.distance(&g.apply(&x), &g.apply(&y)).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * d0.max(1.0), "{d0} vs {d1}");
    }

    #[test]
    fn chord_distance_matches_log_ratio(lo in -10.0f64..-0.01, len in 0.01f64..5.0, extra in 0.01f64..10.0) {
        let hi = len + extra;
        // x at 0, y at len, p at lo, q at hi
        let direct = 0.5 * ((len - lo) * hi / ((-lo) * (hi - len))).ln();
        let from_unit = chord_distance(lo / len, hi / len);
        prop_assert!((direct - from_unit).abs() < 1e-10 * direct.max(1.0));
    }
}

#[test]
fn distance_does_not_depend_on_the_chart() {
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
    let standard = QuadricDomain::klein(2);
    let centred_at = DVector::from_vec(vec![0.3, -0.4, 1.0]);
    let chart = AffineChart::centered(&q, &centred_at).unwrap();
    let other = QuadricDomain::with_chart(q, chart).unwrap();
    let c1 = MetricContext::new(&standard);
    let c2 = MetricContext::new(&other);
    let mut r = sampling::rng(5);
    for _ in 0..500 {
        let x = standard.chart().embed(&random_interior(&standard, &mut r));
        let y = standard.chart().embed(&random_interior(&standard, &mut r));
        let d1 = c1.distance(&x, &y).unwrap();
        let d2 = c2.distance(&x, &y).unwrap();
        assert!((d1 - d2).abs() < 1e-9, "{d1} vs {d2}");
    }
}

#[test]
fn distance_on_image_domain_matches() {
    let e = QuadricDomain::klein(3);
    let ctx = MetricContext::new(&e);
    let m = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.2 } else { 0.1 * (i as f64 - j as f64) });
    let g = ProjMap::normalized(m).unwrap();
    let ge = e.transformed(&g).unwrap();
    let gctx = MetricContext::new(&ge);
    let mut r = sampling::rng(9);
    for _ in 0..200 {
        let x = e.chart().embed(&random_interior(&e, &mut r));
        let y = e.chart().embed(&random_interior(&e, &mut r));
        let d0 = ctx.distance(&x, &y).unwrap();
        let d1 = gctx.distance(&g.apply(&x), &g.apply(&y)).unwrap();
        assert!((d0 - d1).abs() < 1e-9);
    }
    assert_eq!(ge.dim(), 3);
}
