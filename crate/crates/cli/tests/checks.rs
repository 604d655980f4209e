use hb_cli::{parse_scene, run_checks, Scene, Suite};

fn fixture(name: &str) -> Scene {
    let path = format!("{}/../../scenes/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_scene(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn klein_metric_suite_passes() {
    let report = run_checks(&Scene::klein(2), Suite::Metric, 1).unwrap();
    for e in &report.entries {
        assert!(e.pass, "{e:?}");
    }
    assert!(report.entries.iter().any(|e| e.id == "metric.quadric_closed_form"));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn square_hyperbolicity_is_an_expected_failure() {
    let report = run_checks(&fixture("square.json"), Suite::Hyperbolicity, 1).unwrap();
    let e = report
        .entries
        .iter()
        .find(|e| e.id.ends_with("expected_fail"))
        .expect("control entry");
    assert!(e.pass);
    // the stability ratio itself exceeds its threshold
    assert!(e.residual > e.threshold);
}

#[test]
fn flat_bend_reproduces_the_base_exactly() {
    let report = run_checks(&fixture("bend_flat.json"), Suite::Bending, 1).unwrap();
    let ids: Vec<&str> = report
        .entries
        .iter()
        .filter(|e| e.id.starts_with("bending.identity"))
        .map(|e| e.id.as_str())
        .collect();
    assert_eq!(
        ids,
        [
            "bending.identity.A",
            "bending.identity.B",
            "bending.identity.chamber_maps"
        ]
    );
    for e in report.entries.iter().filter(|e| e.id.starts_with("bending.identity")) {
        assert_eq!(e.residual, 0.0, "{e:?}");
        assert_eq!(e.threshold, 0.0);
    }
    assert!(report.all_pass(), "{}", report.to_jsonl());
}

#[test]
fn report_lines_carry_the_four_fields() {
    let report = run_checks(&Scene::klein(2), Suite::Metric, 4).unwrap();
    let text = report.to_jsonl();
    assert_eq!(text.lines().count(), report.entries.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 4);
        let at = |k: &str| line.find(&format!("\"{k}\":")).unwrap();
        assert!(at("id") < at("residual") && at("residual") < at("threshold") && at("threshold") < at("pass"));
    }
}

#[test]
fn exit_code_tracks_failures() {
    let mut report = run_checks(&Scene::klein(2), Suite::Metric, 1).unwrap();
    assert_eq!(report.exit_code(), 0);
    report.entries[0].pass = false;
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn same_seed_same_report() {
    let scene = fixture("torus.json");
    let a = run_checks(&scene, Suite::All, 9).unwrap().to_jsonl();
    let b = run_checks(&scene, Suite::All, 9).unwrap().to_jsonl();
    assert_eq!(a, b);
    let c = run_checks(&scene, Suite::All, 10).unwrap().to_jsonl();
    assert_ne!(a, c);
}
