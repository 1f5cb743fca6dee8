use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ultrastab"));
    c.env_remove("ULTRASTAB_CAPS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Order-3 matrix [[0,-1],[1,-1]] with its (0,0) entry moved by 2^3, row-major.
fn z3_rep() -> Value {
    json!({
        "presentation": { "generators": ["s"], "relators": [["s", "s", "s"]] },
        "ring": { "mode": "zp", "p": 2, "precision": 8 },
        "n": 2,
        "images": [["8", "255", "1", "255"]]
    })
}

#[test]
fn z3_repair_is_optimal_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let rep = write(dir.path(), "rep.json", &z3_rep());
    let cert = dir.path().join("cert.json");
    let out = dir.path().join("out.json");
    let o = run(&["repair", "--mode", "finite-image", s(&rep), "--certificate", s(&cert), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = read(&cert);
    assert_eq!(c["estimate_class"], "optimal");
    assert_eq!(c["defect_before_val"], 3);
    assert_eq!(c["defect_after_val"], 8);
    assert!(c["distance_val"].as_u64().unwrap() >= 3);

    let d = run(&["defect", s(&out)]);
    let report: Value = serde_json::from_slice(&d.stdout).unwrap();
    assert_eq!(report["saturated"], true);

    assert_eq!(run(&["verify", s(&cert), s(&rep)]).status.code(), Some(0));
}

#[test]
fn tampered_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let rep = write(dir.path(), "rep.json", &z3_rep());
    let cert = dir.path().join("cert.json");
    let o = run(&["repair", "--mode", "finite-image", s(&rep), "--certificate", s(&cert), "-o", s(&dir.path().join("o.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let mut c = read(&cert);
    c["distance_val"] = json!(c["distance_val"].as_u64().unwrap() + 1);
    let bad = write(dir.path(), "bad.json", &c);
    let v = run(&["verify", s(&bad), s(&rep)]);
    assert_eq!(v.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(report["mismatches"], json!(["distance_val"]));

    // a different input file is caught through the digest
    let mut other = z3_rep();
    other["images"][0][0] = json!("16");
    let other = write(dir.path(), "other.json", &other);
    assert_eq!(run(&["verify", s(&cert), s(&other)]).status.code(), Some(1));
}

#[test]
fn gbs_bs23_at_three_is_pifree() {
    let o = run(&["gbs", "--bs", "2", "3", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pifree"]["met"], true);
    assert_eq!(r["estimate"], "optimal");

    let dir = tempfile::tempdir().unwrap();
    let g = write(
        dir.path(),
        "g.json",
        &json!({ "vertices": ["v"], "edges": [{ "from": 0, "to": 0, "w_minus": 2, "w_plus": 2 }] }),
    );
    let o = run(&["gbs", s(&g), "--p", "2"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["pifree"]["met"], false);
    assert_eq!(r["vpfree"]["met"], false);
}

#[test]
fn schema_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let mut rep = z3_rep();
    rep["images"][0][1] = json!({ "oops": 1 });
    let rep = write(dir.path(), "rep.json", &rep);
    let o = run(&["defect", s(&rep)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("image 0") && err.contains("entry 1"), "{err}");

    let garbage = dir.path().join("g.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let o = run(&["defect", s(&garbage)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    assert_eq!(run(&["repair", "--mode", "sideways", s(&rep)]).status.code(), Some(2));
}

#[test]
fn monomial_swap_diag() {
    let dir = tempfile::tempdir().unwrap();
    let ring = json!({ "mode": "zp", "p": 3, "precision": 5 });
    let p = write(dir.path(), "p.json", &json!({ "ring": ring, "n": 2, "entries": ["0", "1", "1", "0"] }));
    let d = write(dir.path(), "d.json", &json!({ "ring": ring, "n": 2, "entries": ["4", "0", "0", "13"] }));
    let cert = dir.path().join("c.json");
    let out = dir.path().join("o.json");
    let o = run(&["monomial", s(&p), s(&d), "--certificate", s(&cert), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(&out)["entries"], json!(["4", "0", "0", "4"]));
    let c = read(&cert);
    // |4 - 13| = 3^-2 = ‖PD - DP‖
    assert_eq!((c["distance_val"].clone(), c["defect_before_val"].clone()), (json!(2), json!(2)));
    assert_eq!(run(&["verify", s(&cert), s(&p), s(&d)]).status.code(), Some(0));

    // already commuting input comes back unchanged
    let o = run(&["monomial", s(&p), s(&p)]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["output"]["entries"], json!(["0", "1", "1", "0"]));
}

#[test]
fn witness_certificates_verify_from_params() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("c.json");
    let o = run(&[
        "witness", "badestimate", "--p", "3", "--precision", "12", "--i", "2", "--x", "3", "--certificate", s(&cert),
        "-o", s(&dir.path().join("w.json")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = read(&cert);
    assert_eq!(c["defect_before_val"], 3);
    assert_eq!(c["distance_val"], 1);
    assert_eq!(run(&["verify", s(&cert)]).status.code(), Some(0));

    let o = run(&["witness", "commutator", "--p", "2", "--precision", "3", "--a", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["certificate"]["defect_before_val"], 2);
}

#[test]
fn caps_from_env_and_flags() {
    let o = bin().args(["claims", "2", "--p", "2"]).env("ULTRASTAB_CAPS", "closure=0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["witness", "wreath", "--p", "2", "--precision", "6", "--i", "3", "--x", "2", "--cap-wreath-index", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
}

#[test]
fn claims_report_exit_status() {
    let o = run(&["claims", "3", "--min-i", "2", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    // the j = 1 distinctness check fails, so the full range reports failure
    let o = run(&["claims", "2", "--p", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn proptest_suites_are_deterministic() {
    let a = run(&["proptest", "norm-laws", "--p", "3", "--precision", "4", "--samples", "300", "--seed", "9"]);
    let b = run(&["proptest", "norm-laws", "--p", "3", "--precision", "4", "--samples", "300", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let m = run(&["proptest", "monomial", "--ring", "fpx", "--p", "2", "--precision", "5", "--samples", "200"]);
    assert_eq!(m.status.code(), Some(0));
}

#[test]
fn split_section_tree_repair() {
    let dir = tempfile::tempdir().unwrap();
    // Z^2 = <a, b | [a, b]> into depth-2 binary tree automorphisms; a swaps at the
    // root, b swaps only below vertex 0, so they commute modulo level 1
    let a = json!([[1, 0], [0, 1], [0, 1]]);
    let b = json!([[0, 1], [1, 0], [0, 1]]);
    let rep = write(
        dir.path(),
        "tree.json",
        &json!({
            "family": "tree",
            "presentation": { "generators": ["a", "b"], "relators": [["a", "b", "a^-1", "b^-1"]] },
            "arity": 2,
            "depth": 2,
            "images": [a, b]
        }),
    );
    let cert = dir.path().join("c.json");
    let o = run(&["repair", "--mode", "split-section", s(&rep), "--certificate", s(&cert), "-o", s(&dir.path().join("o.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = read(&cert);
    assert_eq!(c["defect_after_val"], c["ledger"]["top_level"]);
    assert!(c["distance_val"].as_u64() >= c["defect_before_val"].as_u64());
    assert_eq!(run(&["verify", s(&cert), s(&rep)]).status.code(), Some(0));
}
