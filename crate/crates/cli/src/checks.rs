use hb_core::bend::{bending_matrix, equivariance_residual, trace_separation, RELATION_TOL};
use hb_core::convex::{midpoint_violations, pencil_ellipsoid};
use hb_core::groups::{classify_element, irreducibility_dimension, limit_set_sample, punctured_torus_rep};
use hb_core::hilbert::{delta_stability, DeltaConfig};
use hb_core::proj::lift_affine;
use hb_core::sampling;
use hb_core::{
    busemann_volume, ConvexDomain, ElementKind, MetricContext, ProjMap, QuadricDomain, Region, Representation, Word,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::scene::{Built, Scene, SceneError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Metric,
    Bending,
    Groups,
    Volume,
    Hyperbolicity,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "metric" => Suite::Metric,
            "bending" => Suite::Bending,
            "groups" => Suite::Groups,
            "volume" => Suite::Volume,
            "hyperbolicity" => Suite::Hyperbolicity,
            "all" => Suite::All,
            _ => return Err(format!("unknown suite `{s}`")),
        })
    }
}

/// One measured invariant: passes when `residual ≤ threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry {
    pub id: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Entry {
    fn new(id: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    fn push(&mut self, e: Entry) {
        self.entries.push(e);
    }
}

pub fn run_checks(scene: &Scene, suite: Suite, seed: u64) -> Result<Report, SceneError> {
    let built = scene.build()?;
    let mut report = Report::default();
    let all = suite == Suite::All;
    if all || suite == Suite::Metric {
        metric_suite(scene, &built, seed, &mut report);
    }
    if all || suite == Suite::Bending {
        bending_suite(scene, &built, seed, &mut report)?;
    }
    if all || suite == Suite::Groups {
        groups_suite(scene, &built, seed, &mut report)?;
    }
    if all || suite == Suite::Volume {
        volume_suite(scene, &built, seed, &mut report);
    }
    if all || suite == Suite::Hyperbolicity {
        hyperbolicity_suite(&built, seed, &mut report);
    }
    Ok(report)
}

fn interior_points(domain: &dyn ConvexDomain, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut r = sampling::rng(seed);
    (0..count)
        .map(|_| hb_core::convex::random_interior(domain, &mut r))
        .collect()
}

fn klein_distance(q: &DMatrix<f64>, chart: &hb_core::AffineChart, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let x = chart.from_chart_coords(&lift_affine(a));
    let y = chart.from_chart_coords(&lift_affine(b));
    let xy = (x.transpose() * q * &y)[0];
    let xx = (x.transpose() * q * &x)[0];
    let yy = (y.transpose() * q * &y)[0];
    (xy.abs() / (xx * yy).sqrt()).max(1.0).acosh()
}

fn metric_suite(scene: &Scene, built: &Built, seed: u64, report: &mut Report) {
    let domain = built.domain();
    let tol = scene.probe.tol;
    let ctx = MetricContext::new(domain);
    let pts = interior_points(domain, 300, seed);
    let d = |a: &DVector<f64>, b: &DVector<f64>| ctx.distance_affine(a, b).unwrap_or(f64::NAN);
    let nan_max = |acc: f64, x: f64| {
        if x.is_nan() || acc.is_nan() {
            f64::NAN
        } else {
            acc.max(x)
        }
    };

    let sym = (0..100)
        .map(|i| (d(&pts[i], &pts[i + 100]) - d(&pts[i + 100], &pts[i])).abs())
        .fold(0.0, nan_max);
    report.push(Entry::new("metric.symmetry", sym, tol));
    let id = (0..100).map(|i| d(&pts[i], &pts[i])).fold(0.0, nan_max);
    report.push(Entry::new("metric.identity", id, scene.probe.linalg_tol));
    let tri = (0..100)
        .map(|i| {
            let (a, b, c) = (&pts[i], &pts[i + 100], &pts[i + 200]);
            (d(a, c) - d(a, b) - d(b, c)).max(0.0)
        })
        .fold(0.0, nan_max);
    report.push(Entry::new("metric.triangle", tri, tol));

    let mut r = sampling::rng(seed ^ 0x6d65_7472);
    let homog = (0..100)
        .map(|i| {
            let v = sampling::unit_vector(&mut r, domain.dim());
            let lam = 0.1 + 4.0 * r.random::<f64>();
            let f1 = ctx.finsler_norm_affine(&pts[i], &v).unwrap_or(f64::NAN);
            let f2 = ctx.finsler_norm_affine(&pts[i], &(&v * lam)).unwrap_or(f64::NAN);
            (f2 - lam * f1).abs() / (lam * f1)
        })
        .fold(0.0, nan_max);
    report.push(Entry::new("metric.finsler_homogeneity", homog, tol));

    if let Built::Quadric(e) = built {
        let closed = (0..100)
            .map(|i| (d(&pts[i], &pts[i + 100]) - klein_distance(e.form(), e.chart(), &pts[i], &pts[i + 100])).abs())
            .fold(0.0, nan_max);
        report.push(Entry::new("metric.quadric_closed_form", closed, tol));

        let n = e.dim();
        let mut worst: f64 = 0.0;
        for k in 0..10 {
            let m = DMatrix::from_fn(
                n + 1,
                n + 1,
                |i, j| if i == j { 1.0 } else { 0.0 } + 0.2 * sampling::gaussian(&mut r),
            );
            let Ok(g) = ProjMap::normalized(m) else { continue };
            let Ok(ge) = e.transformed(&g) else { continue };
            let gctx = MetricContext::new(&ge);
            for i in 0..10 {
                let (a, b) = (&pts[10 * k + i], &pts[10 * k + i + 150]);
                let x = e.chart().embed(a);
                let y = e.chart().embed(b);
                let lhs = ctx.distance(&x, &y).unwrap_or(f64::NAN);
                let rhs = gctx.distance(&g.apply(&x), &g.apply(&y)).unwrap_or(f64::NAN);
                worst = nan_max(worst, (lhs - rhs).abs());
            }
        }
        report.push(Entry::new("metric.projective_invariance", worst, tol));
    }
}

/// Random element of the `SO(n−1,1)` block acting on the last `n`
/// coordinates of `R^{n+1}`, the stabilizer of `{x₁ = 0}` and `e₁`.
pub fn random_wall_stabilizer(n: usize, r: &mut impl Rng) -> DMatrix<f64> {
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
    for i in 0..n {
        for k in i + 1..n {
            let x = 0.5 * sampling::gaussian(r);
            a[(i, k)] = x;
            a[(k, i)] = -x;
        }
    }
    let block = (a * &j).exp();
    let mut h = DMatrix::identity(n + 1, n + 1);
    h.view_mut((1, 1), (n, n)).copy_from(&block);
    h
}

/// `diag(e^{nt}, e^{−t}, …, e^{−t})`.
pub fn diagonal_bending(n: usize, t: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |i, k| match (i, k) {
        (0, 0) => (n as f64 * t).exp(),
        _ if i == k => (-t).exp(),
        _ => 0.0,
    })
}

fn bending_suite(scene: &Scene, built: &Built, seed: u64, report: &mut Report) -> Result<(), SceneError> {
    let linalg = scene.probe.linalg_tol;
    let mut r = sampling::rng(seed ^ 0x6265_6e64);
    for n in 2..=4 {
        for t in [0.1, 1.0] {
            let a = diagonal_bending(n, t);
            let worst = (0..100)
                .map(|_| {
                    let h = random_wall_stabilizer(n, &mut r);
                    (&a * &h - &h * &a).amax()
                })
                .fold(0.0, f64::max);
            report.push(Entry::new(format!("bending.centralizer.n{n}.t{t}"), worst, linalg));
        }
    }
    let nu = DVector::from_vec(vec![1.0, 0.3, -0.2]);
    let p = DVector::from_vec(vec![2.0, 0.1, 0.5]);
    let (s, t) = (0.37, -0.12);
    let composed = bending_matrix(&nu, &p, s) * bending_matrix(&nu, &p, t);
    report.push(Entry::new(
        "bending.map.additive",
        (composed - bending_matrix(&nu, &p, s + t)).amax(),
        scene.probe.tol,
    ));

    let Built::Bent(b) = built else {
        return Ok(());
    };
    let rho0 = punctured_torus_rep();
    for (id, res) in &b.relations {
        report.push(Entry::new(format!("bending.relation.{id}"), *res, RELATION_TOL));
    }
    if b.domain.t() == 0.0 {
        for g in rho0.generators() {
            let w = Word::from_letters(vec![(g.clone(), 1)]);
            let diff = rho0.eval(&w)?.max_abs_diff(&b.rho_t.eval(&w)?);
            report.push(Entry::new(format!("bending.identity.{g}"), diff, 0.0));
        }
        let maps = b
            .domain
            .chambers()
            .iter()
            .map(|c| c.map.max_abs_diff(&ProjMap::identity(2)))
            .fold(0.0, f64::max);
        report.push(Entry::new("bending.identity.chamber_maps", maps, 0.0));
    } else {
        let (_, sep) = trace_separation(&rho0, &b.rho_t, 4)?;
        // nontrivial deformation: the separation must exceed 1e-3
        report.push(Entry::new(
            "bending.trace_separation",
            1e-3 / sep.max(f64::MIN_POSITIVE),
            1.0,
        ));
    }
    let depth = b.params.depth;
    let (eq, _) = equivariance_residual(b, &rho0, 3, depth.saturating_sub(1))?;
    report.push(Entry::new("bending.equivariance", eq, scene.probe.tol));
    report.push(Entry::new(
        "bending.wall_consistency",
        b.domain.wall_consistency(20),
        1e-7,
    ));
    let mv = midpoint_violations(&b.domain, scene.probe.samples, seed);
    report.push(Entry::new("bending.convexity.midpoints", mv as f64, 0.0));
    Ok(())
}

/// Distance between a chart point and the boundary along the ray from the
/// domain's interior point.
pub fn boundary_gap(domain: &dyn ConvexDomain, a: &DVector<f64>) -> f64 {
    let c = domain.interior_point();
    let v = a - &c;
    let len = v.norm();
    if len == 0.0 {
        return f64::INFINITY;
    }
    let u = v / len;
    match domain.chord_params(&c, &u) {
        Ok((_, s)) => (s - len).abs(),
        Err(_) => f64::INFINITY,
    }
}

fn groups_suite(scene: &Scene, built: &Built, seed: u64, report: &mut Report) -> Result<(), SceneError> {
    let rho0 = punctured_torus_rep();
    let klein = QuadricDomain::klein(2);
    for g in rho0.generators() {
        let m = rho0.image(g).expect("own generator").matrix();
        let q = klein.form();
        report.push(Entry::new(
            format!("groups.so_q.{g}"),
            (m.transpose() * q * m - q).amax(),
            scene.probe.linalg_tol * 1e3,
        ));
    }
    let comm = rho0.eval(&Word::parse("A B A^-1 B^-1")?)?;
    let class = classify_element(&comm, 1e-6);
    let spread = class.eigenvalues.iter().map(|z| (z - 1.0).norm()).fold(0.0, f64::max);
    let kind_ok = if class.kind == ElementKind::ParabolicOrUnipotent {
        spread
    } else {
        f64::INFINITY
    };
    report.push(Entry::new("groups.commutator_unipotent", kind_ok, 1e-6));

    let rho: Representation = scene.representation(built).unwrap_or_else(|| rho0.clone());
    let dim = irreducibility_dimension(&rho, 4);
    report.push(Entry::new(
        "groups.irreducibility_deficit",
        (9 - dim.min(9)) as f64,
        0.0,
    ));

    let limit_domain: &dyn ConvexDomain = match built {
        Built::Bent(b) => &b.domain,
        Built::Quadric(e) if scene.group.is_some() && e.form() == klein.form() => e,
        _ => &klein,
    };
    let pts = limit_set_sample(&rho, limit_domain, 8, 100, seed)?;
    let worst = pts
        .iter()
        .map(|p| match limit_domain.chart().project(p, 1e-12) {
            Ok(a) => boundary_gap(limit_domain, &a),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    report.push(Entry::new("groups.limit_set_on_boundary", worst, 1e-6));
    Ok(())
}

fn ball_area(n: usize, r: f64) -> f64 {
    match n {
        2 => std::f64::consts::TAU * (r.cosh() - 1.0),
        _ => std::f64::consts::PI * ((2.0 * r).sinh() - 2.0 * r),
    }
}

fn volume_suite(scene: &Scene, built: &Built, seed: u64, report: &mut Report) {
    let Built::Quadric(e) = built else {
        return;
    };
    let n = e.dim();
    if n > 3 {
        return;
    }
    let ctx = MetricContext::new(e);
    let center = e.chart().embed(e.center());
    let samples = scene.probe.samples;
    if let Ok((est, se)) = busemann_volume(
        &ctx,
        Region::Ball {
            center: &center,
            radius: 1.0,
        },
        samples,
        seed,
    ) {
        let exact = ball_area(n, 1.0);
        report.push(Entry::new(
            "volume.ball_radius_1",
            (est - exact).abs() / exact,
            4.0 * se / est + 0.005,
        ));
    }

    // nested pencil members share a tangency point; the larger domain has the
    // smaller Busemann measure on a common region
    let mut worst = f64::NEG_INFINITY;
    let mut r = sampling::rng(seed ^ 0x0076_6f6c);
    for k in 0..10 {
        let u = sampling::unit_vector(&mut r, n);
        let Ok((_, s)) = e.chord_params(e.center(), &u) else {
            continue;
        };
        let p = e.chart().embed(&(e.center() + &u * s));
        let s_in = 0.5 + r.random::<f64>();
        let s_out = 0.2 * r.random::<f64>();
        let (Ok(inner), Ok(outer)) = (pencil_ellipsoid(e, &p, s_in), pencil_ellipsoid(e, &p, s_out)) else {
            continue;
        };
        let Ok(core) = pencil_ellipsoid(e, &p, s_in + 2.0) else {
            continue;
        };
        let ci = MetricContext::new(&inner);
        let co = MetricContext::new(&outer);
        let region = Region::Domain(&core);
        let (Ok((mi, si)), Ok((mo, _))) = (
            busemann_volume(&ci, region, samples / 4, seed + k),
            busemann_volume(&co, region, samples / 4, seed + k),
        ) else {
            continue;
        };
        worst = worst.max((mo - mi * (1.0 + 3.0 * si / mi)) / mi);
    }
    report.push(Entry::new("volume.comparison", worst, 0.0));
}

fn hyperbolicity_suite(built: &Built, seed: u64, report: &mut Report) {
    let domain = built.domain();
    let ctx = MetricContext::new(domain);
    let mut cfg = DeltaConfig {
        triangles: 16,
        points_per_side: 40,
        ..DeltaConfig::default()
    };
    let control = if let Built::Polytope(p) = built {
        cfg.anchors = p.vertices();
        true
    } else {
        false
    };
    let st = delta_stability(&ctx, &cfg, seed, &[0.99, 0.999, 0.9999]);
    let ratio = match st.estimates.as_slice() {
        [.., prev, last] => last / prev.max(f64::MIN_POSITIVE),
        _ => f64::INFINITY,
    };
    if control {
        // flat control: stabilization is expected to fail
        let mut e = Entry::new("hyperbolicity.delta_stability.expected_fail", ratio, 1.2);
        e.pass = !st.stable;
        report.push(e);
    } else {
        report.push(Entry::new(
            "hyperbolicity.delta_stability",
            if st.stable { ratio.min(1.2) } else { ratio },
            1.2,
        ));
        let last = st.estimates.last().copied().unwrap_or(f64::INFINITY);
        report.push(Entry::new("hyperbolicity.delta_finite", last, 10.0));
    }
}
