use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_workbench")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn workbench(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("workbench runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn lisa_scenario_passes_with_small_defect() {
    let p = scenario("lisa.json");
    let out = workbench(&["verify", "--scenario", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["status"], "pass");
    let defect = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "pullback defect").unwrap();
    assert!(defect["measured"].as_f64().unwrap() < 1e-6);
}

#[test]
fn counterfactual_scenario_passes_by_localizing() {
    let p = scenario("wrapped-counterfactual.json");
    let out = workbench(&["verify", "--scenario", p.to_str().unwrap(), "--json", "--samples", "600"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["counterfactual"], true);
    let checks = r["checks"].as_array().unwrap();
    let sym = checks.iter().find(|c| c["name"] == "wrapped ball symplectic").unwrap();
    assert_eq!(sym["passed"], false);
    assert_eq!(sym["expected_failure"], true);
    assert!(sym["measured"].as_f64().unwrap() > 1e-2);
    assert!(sym["location"].is_array());
    let loc = checks.iter().find(|c| c["name"] == "broken certificate localized").unwrap();
    assert_eq!(loc["passed"], true);
    assert!(loc["context"].as_str().unwrap().starts_with("segment L"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write(dir.path(), "bad.json", "{ \"schema\": 1, ");
    assert_eq!(workbench(&["verify", "--scenario", malformed.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write(
        dir.path(),
        "unknown.json",
        r#"{"schema":1,"name":"x","construction":{"kind":"lisa","big":2,"small":1,"n":1,"extra":0}}"#,
    );
    assert_eq!(workbench(&["verify", "--scenario", unknown.to_str().unwrap()]).status.code(), Some(2));
    let version = write(dir.path(), "v2.json", r#"{"schema":2,"name":"x","construction":{"kind":"lisa","big":2,"small":1,"n":1}}"#);
    assert_eq!(workbench(&["verify", "--scenario", version.to_str().unwrap()]).status.code(), Some(2));
    let slow = write(
        dir.path(),
        "slow.json",
        r#"{"schema":1,"name":"slow","samples":300,"construction":{"kind":"unwrapped","kappa":1.0,"n":4,"nu":0.5}}"#,
    );
    let out = workbench(&["verify", "--scenario", slow.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "fail");
    let singular = write(
        dir.path(),
        "sing.json",
        r#"{"schema":1,"name":"sing","samples":50,"construction":{"kind":"disjunction-certificate","capacity":0.5,
           "hamiltonian":{"expr":"1 / (x * x + y * y)","support_lo":[-1,-1],"support_hi":[1,1]}}}"#,
    );
    let out = workbench(&["build", "--scenario", singular.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["status"], "error");
    let missing = dir.path().join("absent.json");
    assert_eq!(workbench(&["verify", "--scenario", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn reports_are_byte_identical_for_fixed_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario("wrapped.json");
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = workbench(&["verify", "--scenario", p.to_str().unwrap(), "--seed", "9", "--samples", "400", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn figures_are_written_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p = scenario("z-assembly.json");
    let emit = |sub: &str| {
        let out = dir.path().join(sub);
        let o = workbench(&["figures", "--scenario", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (emit("a"), emit("b"));
    for name in ["skeleton.svg", "strip.svg", "characteristic.svg", "characteristic.csv", "report.json"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        assert_eq!(fa, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = std::fs::read_to_string(a.join("characteristic.csv")).unwrap();
    assert!(csv.starts_with("t,x1,y1,z\n"), "{}", &csv[..40]);
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row.len(), 4);
    assert!(!a.join("report.tmp").exists());
}

#[test]
fn empty_figure_list_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("figs");
    let written = symplectic_energy::workbench::emit_figures(&[], &target).unwrap();
    assert!(written.is_empty());
    assert!(!target.exists());
}

#[test]
fn text_output_lists_checks() {
    let p = scenario("lisa.json");
    let out = workbench(&["verify", "--scenario", p.to_str().unwrap(), "--samples", "500"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("Pass"));
    assert!(text.contains("ok   pullback defect"));
}
