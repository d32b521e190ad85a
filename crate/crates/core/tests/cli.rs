use std::path::Path;
use std::process::Command;

use seqrank::pipeline::{SampleSource, SyntheticSource};
use seqrank::ranking::RpcModel;

fn seqrank(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_seqrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(seqrank(&["--help"]).status.code(), Some(0));
    assert_eq!(seqrank(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(seqrank(&["gen-scenes", "--out", "x"]).status.code(), Some(1));
    // a missing scene file is a domain error, not a usage error
    assert_eq!(seqrank(&["plan", "--scene", "/nonexistent/scene.json"]).status.code(), Some(2));
    let out = seqrank(&["stats", "--tree-size", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("41"));
}

#[test]
fn planning_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let gen = seqrank(&["gen-scenes", "--seed", "5", "--classes", "cube,can,carton", "--out", p(&scenes)]);
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    let scene = scenes.join("scene_0000.json");
    let a = seqrank(&["plan", "--scene", p(&scene)]);
    let b = seqrank(&["plan", "--scene", p(&scene)]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["best"]["sequence"].as_array().unwrap().len(), 3);
    let ex = seqrank(&["plan", "--scene", p(&scene), "--exhaustive"]);
    let full: serde_json::Value = serde_json::from_slice(&ex.stdout).unwrap();
    assert_eq!(full["best"], report["best"]);
}

#[test]
fn train_and_eval_from_a_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    let src = SyntheticSource::default();
    let mut lines = String::new();
    for id in 0..12 {
        for s in src.produce(id).unwrap().samples {
            lines.push_str(&serde_json::to_string(&s).unwrap());
            lines.push('\n');
        }
    }
    let data = dir.path().join("data.jsonl");
    std::fs::write(&data, lines).unwrap();
    let model = dir.path().join("model.json");
    let t = seqrank(&["train", "--dataset", p(&data), "--voting", "binary", "--out", p(&model)]);
    assert_eq!(t.status.code(), Some(0), "{}", String::from_utf8_lossy(&t.stderr));
    let m = RpcModel::load(&model).unwrap();
    assert_eq!(m.labels.len(), 4);
    let e = seqrank(&["eval", "--model", p(&model), "--dataset", p(&data)]);
    assert_eq!(e.status.code(), Some(0), "{}", String::from_utf8_lossy(&e.stderr));
    let report: serde_json::Value = serde_json::from_slice(&e.stdout).unwrap();
    assert!(report["tau_w"]["median"].as_f64().unwrap() > 0.5, "{report}");
}
