use std::path::Path;
use std::process::{Command, Output};

use curveloft::curve_graph::{save_drawing, CurveDrawing, CurveFragment};
use curveloft::geom::Point3;

fn curveloft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curveloft"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_box(dir: &Path) {
    let out = curveloft(&[
        "synth",
        "--scene",
        "box",
        "--views",
        "6",
        "--defects",
        "none",
        "--out",
        s(dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "drawing.json",
        "cameras.json",
        "gt.obj",
        "gt.json",
        "spec.json",
        "run.json",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn synth_then_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("box");
    synth_box(&scene);
    let out = curveloft(&["pipeline", "--config", s(&scene.join("run.json")), "--overlay-svg"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("surviving"));
    let run = scene.join("run");
    assert!(run.join("manifest.json").is_file());
    assert!(run.join("eval/pr.csv").is_file());
    assert!(run.join("03_verified/overlays/view_000.svg").is_file());
}

#[test]
fn staged_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("box");
    synth_box(&scene);
    let t = tmp.path();
    let steps: Vec<Vec<String>> = vec![
        vec![
            "reorg",
            "--in",
            s(&scene.join("drawing.json")),
            "--out",
            s(&t.join("r.json")),
            "--report",
            s(&t.join("rep.json")),
        ],
        vec![
            "hypothesize",
            "--drawing",
            s(&t.join("r.json")),
            "--cameras",
            s(&scene.join("cameras.json")),
            "--out",
            s(&t.join("h")),
        ],
        vec![
            "verify",
            "--hyps",
            s(&t.join("h")),
            "--drawing",
            s(&t.join("r.json")),
            "--cameras",
            s(&scene.join("cameras.json")),
            "--out",
            s(&t.join("v")),
        ],
        vec![
            "evaluate",
            "--result",
            s(&t.join("v")),
            "--gt",
            s(&scene),
            "--out",
            s(&t.join("pr.csv")),
            "--plot",
            s(&t.join("pr.svg")),
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        let out = curveloft(&args);
        assert!(
            out.status.success(),
            "{}: {}",
            step[0],
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let csv = std::fs::read_to_string(t.join("pr.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(t.join("v/records.json").is_file());
}

#[test]
fn missing_cameras_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("box");
    synth_box(&scene);
    std::fs::remove_file(scene.join("cameras.json")).unwrap();
    let out = curveloft(&["pipeline", "--config", s(&scene.join("run.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!scene.join("run").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn loft_writes_mesh_and_sidecar() {
    let tmp = tempfile::tempdir().unwrap();
    let line = |id, y: f64| {
        CurveFragment::new(
            id,
            (0..11).map(|i| Point3::new(i as f64 * 0.1, y, 0.0)).collect(),
            false,
        )
    };
    let curves = tmp.path().join("curves.json");
    save_drawing(&curves, &CurveDrawing::from_fragments(vec![line(0, 0.0), line(1, 0.5)])).unwrap();
    let obj = tmp.path().join("patch.obj");
    let out = curveloft(&[
        "loft",
        "--curves",
        s(&curves),
        "--pairing",
        "parallel",
        "--out",
        s(&obj),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&obj).unwrap().contains("\nf "));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(obj.with_extension("json")).unwrap()).unwrap();
    assert!(summary["boundary_deviation"].as_f64().unwrap() < 1e-6);

    let bad = curveloft(&["loft", "--curves", s(&curves), "--pairing", "closed", "--out", s(&obj)]);
    assert_eq!(bad.status.code(), Some(2));
    let unknown = curveloft(&[
        "loft",
        "--curves",
        s(&curves),
        "--pairing",
        "sideways",
        "--out",
        s(&obj),
    ]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn unknown_scene_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = curveloft(&["synth", "--scene", "castle", "--out", s(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
}
