use std::fmt::Write as _;

use hb_core::groups::dirichlet_domain;
use hb_core::proj::lift_affine;
use hb_core::{AffineChart, ConvexDomain, Membership, ProjMap, ProjPoint, QuadricDomain};
use nalgebra::DVector;
use thiserror::Error;

use crate::scene::{Built, DomainSpec, RenderSettings, RepName, Scene, SceneError};

const CANVAS: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderKind {
    Tiling,
    BentDomain,
    FundamentalDomain,
}

impl std::str::FromStr for RenderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tiling" => Ok(RenderKind::Tiling),
            "bent-domain" => Ok(RenderKind::BentDomain),
            "fundamental-domain" => Ok(RenderKind::FundamentalDomain),
            _ => Err(format!("unknown render kind `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("rendering needs dimension 2, scene has dimension {0}")]
    DimensionUnsupported(usize),
    #[error("this view needs a group recipe on an ellipsoid scene")]
    MissingGroup,
    #[error("this view needs a bend scene")]
    NotBent,
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("group computation failed: {0}")]
    Group(#[from] hb_core::GroupError),
}

/// SVG document in the scene's viewport, y up, with fixed six-decimal output.
struct Svg {
    body: String,
    viewport: [f64; 4],
    width: f64,
}

impl Svg {
    fn new(settings: &RenderSettings) -> Self {
        Self {
            body: String::new(),
            viewport: settings.viewport,
            width: settings.stroke_width,
        }
    }

    fn xy(&self, a: &DVector<f64>) -> (f64, f64) {
        let [x0, y0, x1, y1] = self.viewport;
        ((a[0] - x0) / (x1 - x0) * CANVAS, (y1 - a[1]) / (y1 - y0) * CANVAS)
    }

    fn points(&self, pts: &[DVector<f64>]) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.xy(p);
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{x:.6},{y:.6}").unwrap();
        }
        s
    }

    fn polygon(&mut self, class: &str, color: &str, pts: &[DVector<f64>], extra: &str) {
        let points = self.points(pts);
        writeln!(
            self.body,
            r#"  <polygon class="{class}"{extra} fill="none" stroke="{color}" stroke-width="{:.6}" points="{points}"/>"#,
            self.width
        )
        .unwrap();
    }

    fn line(&mut self, class: &str, color: &str, a: &DVector<f64>, b: &DVector<f64>) {
        let (x1, y1) = self.xy(a);
        let (x2, y2) = self.xy(b);
        writeln!(
            self.body,
            r#"  <line class="{class}" stroke="{color}" stroke-width="{:.6}" x1="{x1:.6}" y1="{y1:.6}" x2="{x2:.6}" y2="{y2:.6}"/>"#,
            self.width * 1.5
        )
        .unwrap();
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {CANVAS} {CANVAS}\" width=\"{CANVAS}\" height=\"{CANVAS}\">\n{}</svg>\n",
            self.body
        )
    }
}

/// Boundary points hit by `count` evenly spaced rays from the interior point.
pub fn boundary_polyline(domain: &dyn ConvexDomain, count: usize) -> Vec<DVector<f64>> {
    let c = domain.interior_point();
    let n = domain.dim();
    (0..count)
        .filter_map(|k| {
            let a = std::f64::consts::TAU * k as f64 / count as f64;
            let mut u = DVector::zeros(n);
            u[0] = a.cos();
            u[1] = a.sin();
            let (_, s) = domain.chord_params(&c, &u).ok()?;
            s.is_finite().then(|| &c + u * s)
        })
        .collect()
}

/// Signed turning angle at every vertex of a closed polyline.
pub fn turning_angles(pts: &[DVector<f64>]) -> Vec<f64> {
    let m = pts.len();
    (0..m)
        .map(|i| {
            let (a, b, c) = (&pts[(i + m - 1) % m], &pts[i], &pts[(i + 1) % m]);
            let (u, v) = (b - a, c - b);
            let cross = u[0] * v[1] - u[1] * v[0];
            cross.atan2(u.dot(&v))
        })
        .collect()
}

/// Segment of the chart line `{a : ν·(a, 1) = 0}` inside the domain, found
/// from the line's point nearest the domain's interior point.
fn line_in_domain(domain: &dyn ConvexDomain, nu: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let c = domain.interior_point();
    let w = DVector::from_vec(vec![nu[0], nu[1]]);
    let ww = w.norm_squared();
    if ww < 1e-300 {
        return None;
    }
    let off = (nu[2] + w.dot(&c)) / ww;
    let p = &c - &w * off;
    if domain.membership(&p) != Membership::Inside {
        return None;
    }
    let dir = DVector::from_vec(vec![-w[1], w[0]]) / ww.sqrt();
    let (lo, hi) = domain.chord_params(&p, &dir).ok()?;
    Some((&p + &dir * lo, &p + &dir * hi))
}

fn map_point(chart: &AffineChart, g: &ProjMap, a: &DVector<f64>) -> Option<DVector<f64>> {
    let x = chart.from_chart_coords(&lift_affine(a));
    let y = ProjPoint::new(g.matrix() * x).ok()?;
    chart.project(&y, 1e-12).ok()
}

pub fn render_svg(scene: &Scene, what: RenderKind) -> Result<String, RenderError> {
    if scene.dimension != 2 {
        return Err(RenderError::DimensionUnsupported(scene.dimension));
    }
    let built = scene.build()?;
    match what {
        RenderKind::BentDomain => match &built {
            Built::Bent(_) => Ok(bent_svg(scene, &built)),
            _ => Err(RenderError::NotBent),
        },
        RenderKind::Tiling | RenderKind::FundamentalDomain => {
            let Built::Quadric(omega) = &built else {
                return match &built {
                    Built::Bent(_) if what == RenderKind::Tiling => Ok(bent_svg(scene, &built)),
                    _ => Err(RenderError::MissingGroup),
                };
            };
            let trivial = scene.group.as_ref().is_none_or(|g| g.rep == RepName::Trivial);
            if trivial {
                return Ok(boundary_only(scene, built.domain()));
            }
            group_svg(scene, &built, omega, what)
        }
    }
}

/// One document per entry of `render.t_steps`: the bent domain at each step.
pub fn render_bend_steps(scene: &Scene) -> Result<Vec<String>, RenderError> {
    let DomainSpec::Bend { depth, .. } = scene.domain else {
        return Err(RenderError::NotBent);
    };
    scene
        .render
        .t_steps
        .iter()
        .map(|&t| {
            let mut s = scene.clone();
            if let DomainSpec::Bend { t: st, .. } = &mut s.domain {
                *st = t;
            }
            let built = Built::Bent(Box::new(scene.bend_with(t, depth)?));
            Ok(bent_svg(&s, &built))
        })
        .collect()
}

fn boundary_only(scene: &Scene, domain: &dyn ConvexDomain) -> String {
    let r = &scene.render;
    let mut svg = Svg::new(r);
    svg.polygon(
        "boundary",
        &r.boundary_color,
        &boundary_polyline(domain, r.boundary_points),
        "",
    );
    svg.finish()
}

fn bent_svg(scene: &Scene, built: &Built) -> String {
    let r = &scene.render;
    let domain = built.domain();
    let mut svg = Svg::new(r);
    svg.polygon(
        "boundary",
        &r.boundary_color,
        &boundary_polyline(domain, r.boundary_points),
        "",
    );
    if let Built::Bent(b) = built {
        let chart = domain.chart();
        for c in b.domain.chambers().iter().filter(|c| c.depth <= r.wall_depth) {
            let Some(entry) = &c.entry else { continue };
            let image = c.map.apply_hyperplane(entry);
            let nu = chart.covector_to_chart(image.covector());
            if let Some((p, q)) = line_in_domain(domain, &nu) {
                svg.line("wall", &r.wall_color, &p, &q);
            }
        }
    }
    svg.finish()
}

fn group_svg(scene: &Scene, built: &Built, omega: &QuadricDomain, what: RenderKind) -> Result<String, RenderError> {
    let r = &scene.render;
    let rho = scene.representation(built).ok_or(RenderError::MissingGroup)?;
    let chart = omega.chart();
    let x0 = chart.embed(omega.center());
    let fd = dirichlet_domain(&rho, omega, &x0, scene.word_len().min(3))?;
    let cell = boundary_polyline(&fd, r.boundary_points / 2);

    let mut svg = Svg::new(r);
    svg.polygon(
        "boundary",
        &r.boundary_color,
        &boundary_polyline(omega, r.boundary_points),
        "",
    );
    match what {
        RenderKind::Tiling => {
            let mut seen: Vec<ProjMap> = Vec::new();
            for w in rho.reduced_words(scene.word_len()) {
                let g = rho.eval(&w)?;
                if seen.iter().any(|h| h.max_abs_diff(&g) < 1e-9) {
                    continue;
                }
                seen.push(g.clone());
                let tile: Option<Vec<DVector<f64>>> = cell.iter().map(|a| map_point(chart, &g, a)).collect();
                if let Some(tile) = tile {
                    svg.polygon("tile", &r.tile_color, &tile, &format!(r#" data-word="{w}""#));
                }
            }
        }
        _ => {
            svg.polygon("cell", &r.tile_color, &cell, "");
            for wall in fd.active_walls() {
                let nu = chart.covector_to_chart(wall.hyperplane.covector());
                if let Some((p, q)) = line_in_domain(omega, &nu) {
                    svg.line("wall", &r.wall_color, &p, &q);
                }
            }
        }
    }
    Ok(svg.finish())
}

/// Count of distinct group elements among the reduced words of the scene's
/// word length, the number of tiles drawn by a tiling.
pub fn distinct_elements(scene: &Scene) -> Result<usize, RenderError> {
    let built = scene.build()?;
    let rho = scene.representation(&built).ok_or(RenderError::MissingGroup)?;
    let mut seen: Vec<ProjMap> = Vec::new();
    for w in rho.reduced_words(scene.word_len()) {
        let g = rho.eval(&w)?;
        if !seen.iter().any(|h| h.max_abs_diff(&g) < 1e-9) {
            seen.push(g);
        }
    }
    Ok(seen.len())
}
