use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn opstable(config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opstable"))
        .arg(config)
        .arg("--output")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn shipped(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = opstable(&shipped("simulate.json"), &tmp.path().join("a"));
    let b = opstable(&shipped("simulate.json"), &tmp.path().join("b"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let ca = fs::read(tmp.path().join("a/paths.csv")).unwrap();
    let cb = fs::read(tmp.path().join("b/paths.csv")).unwrap();
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn manifest_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    assert_eq!(opstable(&shipped("simulate.json"), &first).status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(first.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["seed"], 7);
    let echo = write_config(tmp.path(), "echo.json", &manifest["config"].to_string());
    let second = tmp.path().join("second");
    assert_eq!(opstable(&echo, &second).status.code(), Some(0));
    assert_eq!(
        fs::read(first.join("paths.csv")).unwrap(),
        fs::read(second.join("paths.csv")).unwrap()
    );
}

#[test]
fn bad_beta_exits_with_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = opstable(&shipped("bad_beta.json"), tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"]["field"], "beta");
}

#[test]
fn unknown_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"command": "kernel", "colour": "blue", "output": {"path": "x"}}"#,
    );
    let out = opstable(&cfg, &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn numerical_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(shipped("joint.json"))
        .unwrap()
        .replace(r#""smoothing": 0.1"#, r#""smoothing": 0.0"#);
    let cfg = write_config(tmp.path(), "j.json", &text);
    let out = opstable(&cfg, &tmp.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("o/run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["error"]["kind"], "grid_too_coarse");
}

#[test]
fn every_shipped_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, artifact) in [
        ("charfn.json", "charfn.csv"),
        ("kernel.json", "kernel.csv"),
        ("joint.json", "joint_density.csv"),
        ("price.json", "surface.csv"),
    ] {
        let out = tmp.path().join(name);
        assert_eq!(opstable(&shipped(name), &out).status.code(), Some(0), "{name}");
        assert!(out.join(artifact).exists(), "{name}");
        assert!(out.join("run_manifest.json").exists(), "{name}");
    }
}

#[test]
fn gaussian_validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = opstable(&shipped("gaussian_validate.json"), tmp.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 6);
}

#[test]
fn json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(shipped("charfn.json"))
        .unwrap()
        .replace(r#""format": "csv""#, r#""format": "json""#);
    let cfg = write_config(tmp.path(), "c.json", &text);
    assert_eq!(opstable(&cfg, &tmp.path().join("o")).status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("o/charfn.json")).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert_eq!(doc["rows"][0]["value"], 1.0);
}
