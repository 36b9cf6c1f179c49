mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use layoutminer_core::reconstruct::{export_scene, SceneFile, SceneOptions};
use layoutminer_core::Store;
use tempfile::TempDir;

fn layoutminer(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layoutminer"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("LAYOUTMINER_DATA_DIR")
        .env_remove("DATA_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_layoutminer"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_flag_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = layoutminer(tmp.path(), &["analyze", "categories", "--sd", "weird"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_empty_store_reports_no_data() {
    let tmp = TempDir::new().unwrap();
    let out = layoutminer(tmp.path(), &["analyze", "overview"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no data"), "{}", stderr(&out));
}

#[test]
fn export_import_then_analyze_to_file() {
    let tmp = TempDir::new().unwrap();
    let src = tmp.path().join("src");
    let widgets = common::fixture_store(&src, 1);
    let exported = tmp.path().join("export");
    let out = layoutminer(&src, &["export", exported.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(exported.join("manifest.json").exists());

    let dst = tmp.path().join("dst");
    let out = layoutminer(&dst, &["import", exported.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(
        manifest["counts"]["widgets"].as_u64(),
        Some(widgets as u64),
        "{manifest}"
    );

    let report = tmp.path().join("reports/categories.json");
    let out = layoutminer(
        &dst,
        &["analyze", "categories", "--out", report.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let total: f64 = v["distribution"]["entries"]
        .as_object()
        .unwrap()
        .values()
        .map(|e| e["fraction"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    // both stores answer every report identically
    for r in [
        "overview",
        "summary",
        "clusters",
        "widgets-per-scenario",
        "crops",
    ] {
        let a = layoutminer(&src, &["analyze", r]);
        let b = layoutminer(&dst, &["analyze", r]);
        assert!(a.status.success(), "{r}: {}", stderr(&a));
        assert_eq!(stdout(&a), stdout(&b), "{r}");
    }
}

#[test]
fn analyze_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    common::fixture_store(tmp.path(), 2);
    for r in ["ui-types", "functionalities", "activities", "screenshots"] {
        let a = layoutminer(tmp.path(), &["analyze", r, "--clusters", "computed"]);
        let b = layoutminer(tmp.path(), &["analyze", r, "--clusters", "computed"]);
        assert!(a.status.success(), "{r}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn static_dynamic_needs_task_kinds() {
    let tmp = TempDir::new().unwrap();
    common::fixture_store(tmp.path(), 3);
    let out = layoutminer(
        tmp.path(),
        &[
            "analyze",
            "static-dynamic",
            "--task-kind",
            "relaxing=static",
            "--task-kind",
            "focus work=dynamic",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let bad = layoutminer(
        tmp.path(),
        &["analyze", "static-dynamic", "--task-kind", "relaxing"],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn scene_steps_end_at_the_full_export() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    common::fixture_store(&data, 4);
    let (scenario, ds) = {
        let store = Store::open(&data).unwrap();
        (store.scenarios()[0].clone(), store.snapshot())
    };
    let key = format!(
        "{}/{}/{}",
        scenario.participant_id(),
        scenario.environment(),
        scenario.task()
    );
    let dir = tmp.path().join("steps");
    let out = layoutminer(
        &data,
        &["scene", &key, "--step", "--out", dir.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    let events = ds.scenarios[&scenario].len();
    assert_eq!(files.len(), events);
    let full = export_scene(&ds, &scenario, None, &SceneOptions::default()).unwrap();
    assert_eq!(
        fs::read_to_string(files.last().unwrap()).unwrap(),
        full.to_json()
    );

    let single = layoutminer(&data, &["scene", &key, "--as-of", "1"]);
    assert!(single.status.success());
    let scene = SceneFile::from_json(&stdout(&single)).unwrap();
    assert_eq!(scene.as_of_seq, 1);
    assert_eq!(scene.widgets.len(), 1);

    let unknown = layoutminer(&data, &["scene", "nobody/x/y"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn gen_script_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let run = |seed: &str| {
        stdout(&layoutminer(
            tmp.path(),
            &["gen-script", "P1/home/relaxing", "--seed", seed],
        ))
    };
    assert_eq!(run("9"), run("9"));
    assert_ne!(run("9"), run("10"));
    let bad = layoutminer(tmp.path(), &["gen-script", "no-slashes"]);
    assert_eq!(bad.status.code(), Some(2));
}
