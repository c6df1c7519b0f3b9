use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bkp-npoint"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn npoint_worked_value_all_routes() {
    let dir = TempDir::new().unwrap();
    let coords = write(&dir, "c.json", r#"[[1, 0, "1"]]"#);
    let out = dir.path().join("t.json");
    let o = run(&["npoint", "--coords", &coords, "--n", "1", "--max-weight", "5", "--formula", "all", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    assert_eq!(v["schema_version"], json!(1));
    assert_eq!(v["agree"], json!(true));
    let tables = v["tables"].as_array().unwrap();
    assert_eq!(tables.len(), 3);
    for t in tables {
        assert_eq!(
            t["entries"],
            json!([
                {"indices": [1], "value": "-1"},
                {"indices": [3], "value": "0"},
                {"indices": [5], "value": "0"}
            ])
        );
    }
}

#[test]
fn npoint_empty_coords_give_zero_tables() {
    let dir = TempDir::new().unwrap();
    let coords = write(&dir, "c.json", "[]");
    let o = run(&["npoint", "--coords", &coords, "--n", "2", "--weight", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for t in v["tables"].as_array().unwrap() {
        assert!(t["entries"].as_array().unwrap().iter().all(|e| e["value"] == "0"));
    }
}

#[test]
fn npoint_csv_and_determinism() {
    let dir = TempDir::new().unwrap();
    let coords = write(&dir, "c.json", r#"[[2, 1, "3/4"], [1, 0, "-2"], [3, 0, 1]]"#);
    let args = ["npoint", "--coords", &coords, "--n", "2", "--max-weight", "6", "--formula", "wangyang", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("formula,indices,value"));
    assert!(lines.next().unwrap().starts_with("wangyang,1:1,"));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{not json");
    let conflict = write(&dir, "conflict.json", r#"[[2, 1, "1"], [1, 2, "1"]]"#);
    for coords in [bad.as_str(), conflict.as_str(), "/nonexistent/coords.json"] {
        let o = run(&["npoint", "--coords", coords, "--n", "1", "--max-weight", "3"]);
        assert_eq!(o.status.code(), Some(2), "{coords}");
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["convert", "--coords", &conflict]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["npoint", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convert_writes_kp_coordinates() {
    let dir = TempDir::new().unwrap();
    let coords = write(&dir, "c.json", r#"[[1, 0, "1"]]"#);
    let out = dir.path().join("kp.json");
    let o = run(&["convert", "--coords", &coords, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&out), json!([[0, 0, "-2"], [0, 1, "2"]]));

    let empty = write(&dir, "e.json", "[]");
    let o = run(&["convert", "--coords", &empty]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "[]");

    // either triangle is accepted
    let upper = write(&dir, "u.json", r#"[[0, 1, "-1"]]"#);
    let o = run(&["convert", "--coords", &upper]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v, json!([[0, 0, "-2"], [0, 1, "2"]]));
}

#[test]
fn verify_named_checks() {
    let o = run(&["verify", "--check", "lemma", "--k", "3", "--seed", "11", "--instances", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], json!(true));
    assert_eq!(v["checks"][0]["name"], json!("lemma"));
    assert_eq!(v["checks"][0]["params"]["k"], json!("[3]"));

    let o = run(&["verify", "--check", "square", "--weight", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["verify", "--check", "worked"]);
    assert_eq!(o.status.code(), Some(0));
}
