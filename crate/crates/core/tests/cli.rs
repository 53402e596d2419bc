//! The binary's exit codes and reports on small inputs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("quatinv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn quatinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatinv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const F5_TOWER: &str =
    r#"{"base": {"Fp": 5}, "layers": [{"kind": "laurent", "name": "s"}, {"kind": "laurent", "name": "u"}]}"#;

#[test]
fn malformed_input_exits_2() {
    let bad = scratch("bad.json", "{ not json");
    assert_eq!(quatinv(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(quatinv(&["suite", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(quatinv(&["suite", "norms", "--precision", "0"]).status.code(), Some(2));
    assert_eq!(
        quatinv(&["suite", "example-main", "--base", "Fp:5", "--specialize", "2,3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(quatinv(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn slot_tower_scenario_over_f5() {
    let text = format!(
        r#"{{"tower": {F5_TOWER}, "algebra": ["s", "u"],
            "construction": {{"kind": "slot-tower", "pure": ["i", "j", ["0", "1", "1", "0"]]}},
            "suites": ["norm_identity", "theorem_main"], "seed": 1,
            "bounds": {{"precision": 4, "height": 2, "trials": 50}}}}"#
    );
    let path = scratch("f5.json", &text);
    let out = quatinv(&["run", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        stdout(&out),
        String::from_utf8_lossy(&out.stderr)
    );
    let s = stdout(&out);
    assert!(s.contains("norm-identity: VERIFIED"), "{s}");
    assert!(s.contains("theorem-main: VERIFIED"), "{s}");
}

#[test]
fn unitary_scenario_writes_report() {
    let text = r#"{"tower": {"base": "Q"}, "algebra": ["-1", "-1"],
        "construction": {"kind": "unitary-extension", "form": {"kind": "skew-hermitian", "entries": ["i"]}, "a": "-1"},
        "suites": ["hyperbolicity"], "seed": 3}"#;
    let path = scratch("unitary.json", text);
    let dir = std::env::temp_dir().join(format!("quatinv-reports-{}", std::process::id()));
    let out = Command::new(env!("CARGO_BIN_EXE_quatinv"))
        .args(["run", path.to_str().unwrap()])
        .env("QUATINV_REPORT_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("unitary.json")).unwrap()).unwrap();
    assert_eq!(report["verified"], true);
    assert_eq!(report["seed"], 3);
}

#[test]
fn symbol_and_common_slot() {
    let q = scratch("q.json", r#"{"base": "Q", "layers": []}"#);
    let out = quatinv(&["symbol", "-1", "-1", "--tower", q.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout(&out);
    assert!(s.contains("{2,inf}") && s.contains("split: false"), "{s}");

    let f5 = scratch("f5tower.json", F5_TOWER);
    let f5 = f5.to_str().unwrap();
    let found = quatinv(&["common-slot", "--tower", f5, "--slots", "s,u,s+u"]);
    assert_eq!(found.status.code(), Some(0));
    assert!(stdout(&found).starts_with("Found"), "{}", stdout(&found));
    // (su, μ) = (s, μ) + (u, μ) is trivial once both equal (s, u), which is not split.
    let none = quatinv(&["common-slot", "--tower", f5, "--slots", "s,u,s*u"]);
    assert_eq!(none.status.code(), Some(0));
    assert!(stdout(&none).starts_with("NoneCertified"), "{}", stdout(&none));
}
