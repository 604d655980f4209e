use hb_cli::render::{boundary_polyline, distinct_elements, turning_angles};
use hb_cli::{parse_scene, render_bend_steps, render_svg, RenderError, RenderKind, Scene};

fn fixture(name: &str) -> Scene {
    let path = format!("{}/../../scenes/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_scene(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn count(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

#[test]
fn klein_disk_is_a_single_deterministic_polyline() {
    let mut scene = Scene::klein(2);
    scene.group = Some(hb_cli::scene::GroupSpec {
        rep: hb_cli::scene::RepName::Trivial,
        word_len: 4,
    });
    let a = render_svg(&scene, RenderKind::Tiling).unwrap();
    let b = render_svg(&scene, RenderKind::Tiling).unwrap();
    assert_eq!(a, b);
    assert_eq!(count(&a, "boundary"), 1);
    assert_eq!(a.matches("<polygon").count() + a.matches("<line").count(), 1);

    let bare = render_svg(&Scene::klein(2), RenderKind::Tiling).unwrap();
    assert_eq!(bare.matches("<polygon").count(), 1);
    assert!(bare.starts_with("<svg "));
    assert!(bare.contains(r#"viewBox="0 0 1000 1000""#));
}

#[test]
fn coordinates_use_six_decimals_and_flip_y() {
    let svg = render_svg(&Scene::klein(2), RenderKind::Tiling).unwrap();
    let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let first = points.split(' ').next().unwrap();
    // ray at angle 0 hits (1, 0)
    assert_eq!(first, "954.545455,500.000000");
    let second = points.split(' ').nth(1).unwrap();
    let y: f64 = second.split(',').nth(1).unwrap().parse().unwrap();
    assert!(y < 500.0, "positive chart y must sit above the centre line");
}

#[test]
fn torus_tiling_has_one_tile_per_distinct_element() {
    let scene = fixture("torus.json");
    let svg = render_svg(&scene, RenderKind::Tiling).unwrap();
    let n = distinct_elements(&scene).unwrap();
    assert_eq!(count(&svg, "tile"), n);
    // free group on two letters: 1 + 4 + 12 + 36 + 108 reduced words
    assert_eq!(n, 161);
    assert_eq!(svg, render_svg(&scene, RenderKind::Tiling).unwrap());
}

#[test]
fn fundamental_domain_view_draws_cell_and_walls() {
    let svg = render_svg(&fixture("torus.json"), RenderKind::FundamentalDomain).unwrap();
    assert_eq!(count(&svg, "cell"), 1);
    assert!(count(&svg, "wall") >= 4);
}

#[test]
fn bent_boundary_is_discretely_convex() {
    let mut scene = fixture("bend.json");
    let built = scene.bend_with(0.3, 5).unwrap();
    let pts = boundary_polyline(&built.domain, 720);
    assert_eq!(pts.len(), 720);
    let angles = turning_angles(&pts);
    let (lo, hi) = angles
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(lo > -1e-6 || hi < 1e-6, "turning angles span [{lo:e}, {hi:e}]");

    if let hb_cli::scene::DomainSpec::Bend { t, depth, .. } = &mut scene.domain {
        *t = 0.3;
        *depth = 5;
    }
    let svg = render_svg(&scene, RenderKind::BentDomain).unwrap();
    assert_eq!(count(&svg, "boundary"), 1);
    assert!(count(&svg, "wall") > 0);
}

#[test]
fn bend_steps_give_one_document_per_step() {
    let scene = fixture("bend.json");
    let docs = render_bend_steps(&scene).unwrap();
    assert_eq!(docs.len(), scene.render.t_steps.len());
    assert_ne!(docs[0], docs[3]);
    assert_eq!(docs, render_bend_steps(&scene).unwrap());
}

#[test]
fn unsupported_requests_are_errors() {
    let scene = Scene::klein(3);
    assert!(matches!(
        render_svg(&scene, RenderKind::Tiling),
        Err(RenderError::DimensionUnsupported(3))
    ));
    assert!(matches!(
        render_svg(&Scene::klein(2), RenderKind::BentDomain),
        Err(RenderError::NotBent)
    ));
    assert!(matches!(
        render_svg(&fixture("square.json"), RenderKind::FundamentalDomain),
        Err(RenderError::MissingGroup)
    ));
}
