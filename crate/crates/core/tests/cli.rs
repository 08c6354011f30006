use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use rtimpute::report::{parse_table, SimulationReport};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rtimpute"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(&["synth", "--seed", "3", "--n-local", "300", "--n-external", "400", "--out-dir", "."], dir);
}

#[test]
fn synth_writes_cohorts_schemas_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for f in ["local.csv", "external.csv", "local.schema.json", "external.schema.json", "synth.meta.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let local = std::fs::read_to_string(dir.path().join("local.csv")).unwrap();
    assert_eq!(local.lines().count(), 301);
    let spec = ok(&["synth", "--print-default-spec"], dir.path());
    assert!(serde_json::from_str::<Value>(&spec).unwrap()["variables"].is_array());
}

#[test]
fn fit_popchar_and_impute_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let fit: Value = serde_json::from_str(&ok(&["fit", "--data", "local.csv", "--out", "model.json"], d)).unwrap();
    assert_eq!(fit["n"], 300);
    assert!(d.join("model.json").exists());

    ok(&["popchar", "estimate", "--data", "local.csv", "--out", "pc.json"], d);
    ok(
        &["popchar", "pool", "--external", "external.csv", "--local", "local.csv", "--sample", "100", "--out", "pooled.json"],
        d,
    );
    let pooled: Value = serde_json::from_str(&std::fs::read_to_string(d.join("pooled.json")).unwrap()).unwrap();
    assert_eq!(pooled["n"], 500);

    let mut child = bin()
        .args(["impute", "--schema", "local.schema.json", "--popchar", "pc.json", "--method", "jmi"])
        .current_dir(d)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(br#"{"age": 60, "sbp": null, "tc": 6.1}"#).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["completed"]["age"], 60.0);
    assert!(v["completed"]["sbp"].is_f64());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().next().unwrap().starts_with("# rtimpute impute "));
}

#[test]
fn simulate_is_reproducible_and_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &'static str| {
        vec![
            "simulate", "--study", "2", "--scenario", "2,5", "--n-local", "200", "--n-external", "300",
            "--seed", "4", "--fast-loocv", "--out", out,
        ]
    };
    ok(&args("a.csv"), d);
    ok(&args("b.csv"), d);
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(d.join("a.csv.meta.json")).unwrap()).unwrap();
    assert!(meta["resolved"]["approximation"].is_string());

    let table = ok(&["report", "--rows", "a.csv"], d);
    assert!(table.starts_with("# rtimpute simulate"));
    let json = ok(&["report", "--rows", "a.csv", "--format", "json"], d);
    let from_json = SimulationReport::from_json(&json).unwrap();
    assert_eq!(parse_table(&table).unwrap(), from_json);

    std::fs::write(d.join("table.txt"), &table).unwrap();
    let converted = ok(&["report", "--rows", "table.txt", "--from-table", "--format", "json"], d);
    assert_eq!(SimulationReport::from_json(&converted).unwrap(), from_json);

    let dca = ok(&["dca", "--rows", "a.csv", "--scenario", "5", "--thresholds", "0.1,0.2"], d);
    assert_eq!(dca.lines().count(), 3, "{dca}");
}

#[test]
fn errors_are_one_json_line_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fit", "--data", "missing.csv", "--out", "m.json"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let last = stderr.lines().last().unwrap();
    let v: Value = serde_json::from_str(last).unwrap();
    assert!(v["error"]["code"].is_string());
    assert!(v["error"]["message"].is_string());

    let out = run(&["simulate", "--study", "9"], dir.path());
    assert!(!out.status.success());
}
