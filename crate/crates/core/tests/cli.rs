use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn shadowkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shadowkit")).args(args).output().expect("binary runs")
}

fn report(out: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&fs::read(out.join(format!("{name}.report.json"))).unwrap()).unwrap()
}

#[test]
fn bundled_shadow_scenario_passes() {
    let out = tempfile::tempdir().unwrap();
    let file = scenarios().join("doubling-shadow.json");
    let o = shadowkit(&["run", file.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path(), "doubling-shadow");
    assert_eq!(r["pass"], true);
    assert!(r["result"]["max_error"].as_f64().unwrap() < 0.1);
    assert!(r.get("started_unix_ms").is_none());
    assert!(out.path().join("doubling-shadow.meta.json").exists());
    assert!(out.path().join("doubling-shadow.errors.csv").exists());
}

#[test]
fn malformed_json_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, "{\"name\": \"bad\", ").unwrap();
    let o = shadowkit(&["run", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ConfigInvalid"));

    fs::write(&file, r#"{"name": "bad", "family": {"kind": "doubling"}, "experiment": "shadow", "params": {"horizon": "long"}}"#).unwrap();
    let o = shadowkit(&["run", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.horizon"));
}

#[test]
fn large_epsilon_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wide.json");
    fs::write(&file, r#"{"name": "wide", "family": {"kind": "doubling"}, "experiment": "shadow", "params": {"epsilon": 0.125, "delta": 0.01}}"#)
        .unwrap();
    let o = shadowkit(&["run", file.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EpsilonTooLarge"));
    assert_eq!(report(dir.path(), "wide")["error"]["name"], "EpsilonTooLarge");
}

#[test]
fn empty_suite_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = shadowkit(&["suite", dir.path().to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
}

#[test]
fn expected_failures_keep_the_suite_green() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fs::copy(scenarios().join("identity-shadow-control.json"), dir.path().join("control.json")).unwrap();
    let o = shadowkit(&["suite", dir.path().to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("expected-fail"));

    // the same scenario without the expectation fails the suite
    let text = fs::read_to_string(dir.path().join("control.json")).unwrap().replace("\"expect_fail\": true", "\"expect_fail\": false");
    fs::write(dir.path().join("control.json"), text).unwrap();
    let o = shadowkit(&["suite", dir.path().to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn overrides_and_reproducibility() {
    let file = scenarios().join("doubling-shadow.json");
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for out in [&a, &b] {
        let o = shadowkit(&["run", file.to_str().unwrap(), "--out", out.path().to_str().unwrap(), "--seed", "7", "--horizon", "32"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &Path| fs::read(d.join("doubling-shadow.report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let r = report(a.path(), "doubling-shadow");
    assert_eq!(r["seed"], 7);
    assert_eq!(r["horizon"], 32);

    shadowkit(&["run", file.to_str().unwrap(), "--out", c.path().to_str().unwrap()]);
    assert_ne!(read(a.path()), read(c.path()));
}
