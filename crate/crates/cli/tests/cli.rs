use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;
use young_core::{construct, MeasureFamily, ThetaSpec, YoungFunction, EXAMPLE_FAMILY};

fn young() -> Command {
    Command::new(env!("CARGO_BIN_EXE_young"))
}

fn run(args: &[&str]) -> Output {
    young().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn measures_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/example_family.json")
}

fn write_config(dir: &TempDir, name: &str, cfg: Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn base_config(p: f64) -> Value {
    json!({ "p": p, "measures": measures_path(), "horizon": 12 })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_an_artifact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let art = dir.path().join("a.json");
    let out = run(&["build", "--config", s(&cfg), "--out", s(&art)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let y = YoungFunction::from_json(&std::fs::read_to_string(&art).unwrap()).unwrap();
    assert_eq!(y.p(), 2.0);
}

#[test]
fn build_to_stdout_without_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let out = run(&["build", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0);
    assert!(YoungFunction::from_json(&String::from_utf8(out.stdout).unwrap()).is_ok());
}

#[test]
fn outputs_resolve_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config(2.0);
    cfg["outputs"] = json!({ "artifact": "out/a.json" });
    std::fs::create_dir(dir.path().join("out")).unwrap();
    let cfg = write_config(&dir, "c.json", cfg);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 0);
    assert!(dir.path().join("out/a.json").exists());
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();

    let mut missing = base_config(2.0);
    missing["measures"] = json!(dir.path().join("nope.json"));
    let cfg = write_config(&dir, "missing.json", missing);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);

    let cfg = write_config(&dir, "p0.json", base_config(0.0));
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);

    let mut unknown = base_config(2.0);
    unknown["colour"] = json!("blue");
    let cfg = write_config(&dir, "unknown.json", unknown);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);

    let mut eps = base_config(2.0);
    eps["epsilon"] = json!(0.5);
    let cfg = write_config(&dir, "eps.json", eps);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);

    let mut theta = base_config(2.0);
    theta["theta"] = json!({ "kind": "power", "beta": "1.5" });
    let cfg = write_config(&dir, "theta.json", theta);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);

    assert_eq!(code(&run(&["build", "--config", s(&dir.path().join("absent.json"))])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["eval", "1"])), 2);
}

#[test]
fn bad_measures_exit_2() {
    let dir = TempDir::new().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"p": 2, "members": [{"atoms": [[1.0, -1.0]]}]}"#).unwrap();
    let mut cfg = base_config(2.0);
    cfg["measures"] = json!(m);
    let cfg = write_config(&dir, "c.json", cfg);
    assert_eq!(code(&run(&["build", "--config", s(&cfg)])), 2);
}

#[test]
fn verify_default_family_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let report = dir.path().join("r.json");
    let out = run(&["verify", "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let checks = r["checks"].as_array().unwrap();
    let status = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["status"].as_str().unwrap().to_string();
    assert_eq!(status("basic_chain"), "pass");
    assert_eq!(status("second_derivative"), "pass");
    assert_eq!(status("ui_improvement"), "pass");
    assert_eq!(status("small_x"), "skipped");
}

#[test]
fn verify_p1_runs_small_x_branch() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config(1.0);
    cfg["grid"] = json!({ "per_decade": 96, "window_points": 16, "random_pairs": 512 });
    let cfg = write_config(&dir, "c.json", cfg);
    let report = dir.path().join("r.json");
    let out = run(&["verify", "--config", s(&cfg), "--out", s(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let checks = r["checks"].as_array().unwrap();
    let status = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["status"].as_str().unwrap().to_string();
    assert_eq!(status("small_x"), "pass");
    assert_eq!(status("finally_decreasing"), "pass");
    assert_eq!(status("moderate_polynomial_region"), "pass");
    assert_eq!(status("second_derivative"), "pass");
}

#[test]
fn tampered_table_exits_1_and_writes_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let art = dir.path().join("a.json");
    assert_eq!(code(&run(&["build", "--config", s(&cfg), "--out", s(&art)])), 0);
    let original: Value = serde_json::from_str(&std::fs::read_to_string(&art).unwrap()).unwrap();

    // non-monotone: rejected while loading
    let mut v = original.clone();
    v["knot_cumulative"][3][1] = json!("-1");
    std::fs::write(&art, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let report = dir.path().join("r.json");
    assert_eq!(code(&run(&["verify", "--artifact", s(&art), "--out", s(&report)])), 1);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["checks"][0]["name"], "table_consistency");
    assert_eq!(r["checks"][0]["status"], "fail");

    // still monotone but wrong: caught by recomputation
    let mut v = original;
    let last = v["knot_cumulative"].as_array().unwrap().len() - 1;
    v["knot_cumulative"][last][1] = json!("1e300");
    std::fs::write(&art, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    assert_eq!(code(&run(&["verify", "--artifact", s(&art), "--out", s(&report)])), 1);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let table = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "table_consistency").unwrap();
    assert_eq!(table["status"], "fail");
}

#[test]
fn wrong_schema_version_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let art = dir.path().join("a.json");
    assert_eq!(code(&run(&["build", "--config", s(&cfg), "--out", s(&art)])), 0);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&art).unwrap()).unwrap();
    v["version"] = json!(99);
    std::fs::write(&art, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    assert_eq!(code(&run(&["verify", "--artifact", s(&art)])), 2);
    assert_eq!(code(&run(&["eval", "--artifact", s(&art), "1"])), 2);
}

#[test]
fn eval_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(2.0));
    let out = run(&["eval", "--config", s(&cfg), "0", "0.7", "3.5", "1000"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,U,U1,U2");
    assert_eq!(lines[1], "0,0,0,0.25");

    let family = MeasureFamily::from_json(EXAMPLE_FAMILY).unwrap();
    let y = construct(&family, ThetaSpec::default(), 12, None).unwrap();
    for line in &lines[2..] {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(v[1], y.eval(v[0]).unwrap());
        assert_eq!(v[2], y.d1(v[0]).unwrap());
        assert_eq!(v[3], y.d2(v[0]).unwrap());
    }

    assert_eq!(code(&run(&["eval", "--config", s(&cfg), "-1"])), 2);
    assert_eq!(code(&run(&["eval", "--config", s(&cfg), "abc"])), 2);
}

#[test]
fn tabulate_row_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", base_config(3.0));
    let csv = dir.path().join("t.csv");
    let out = run(&["tabulate", "--config", s(&cfg), "--range", "1e-3:1e6:37", "--out", s(&csv)]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 38);
    assert!(rows[1].starts_with("0.001,"));
    assert!(rows[37].starts_with("1000000,"));
    assert_eq!(code(&run(&["tabulate", "--config", s(&cfg), "--range", "5:1:3"])), 2);
    assert_eq!(code(&run(&["tabulate", "--config", s(&cfg), "--range", "1:2"])), 2);
}

#[test]
fn builds_and_reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut cfg = base_config(1.5);
    cfg["grid"] = json!({ "per_decade": 64, "window_points": 16, "random_pairs": 256 });
    let cfg = write_config(&dir, "c.json", cfg);
    let mut arts = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let art = dir.path().join(format!("a{i}.json"));
        let rep = dir.path().join(format!("r{i}.json"));
        assert_eq!(code(&run(&["build", "--config", s(&cfg), "--out", s(&art)])), 0);
        let jobs = if i == 0 { "1" } else { "2" };
        assert_eq!(code(&run(&["--jobs", jobs, "verify", "--config", s(&cfg), "--out", s(&rep)])), 0);
        arts.push(std::fs::read(&art).unwrap());
        reports.push(std::fs::read(&rep).unwrap());
    }
    assert_eq!(arts[0], arts[1]);
    assert_eq!(reports[0], reports[1]);
}
