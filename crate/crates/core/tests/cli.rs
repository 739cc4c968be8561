//! The command line binary: outputs, exit codes and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const S3: &str = "piece A sfs(0) boundaries 1\npiece B sfs(0) boundaries 1\nglue A.1 B.1 [0,1;1,0]\n";
const BRIESKORN_237: &str = "piece S sfs(-2; 1/2, 2/3, 6/7) boundaries 0\n";
const SPLICE: &str = "piece P sfs(-1; 1/2, 1/3) boundaries 1\npiece Q sfs(-1; 1/2, 1/3) boundaries 1\nglue P.1 Q.1 [6,-35;1,-6]\n";
const THREE: &str = "piece P sfs(-1; 1/2, 1/3) boundaries 1\npiece M sfs(-1; 1/2) boundaries 2\npiece Q sfs(-1; 1/2, 2/5) boundaries 1\nglue P.1 M.1 [0,1;1,0]\nglue M.2 Q.1 [1,1;1,0]\n";
// stays undecided at every tested bound, up to 65536
const UNDECIDED: &str = "piece P1 sfs(-3; 1/2, 1/4, 5/7) boundaries 2\npiece P2 sfs(0; 1/4) boundaries 2\npiece P3 sfs(0; 4/5, 5/6) boundaries 1\npiece P4 sfs(-1) boundaries 1\nglue P1.1 P2.1 [0,1;1,-2]\nglue P2.2 P3.1 [0,1;1,-2]\nglue P1.2 P4.1 [0,1;1,0]\n";
const S1_S2: &str = "piece A sfs(0) boundaries 1\npiece B sfs(0) boundaries 1\nglue A.1 B.1 [1,0;0,-1]\n";

fn lspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lspace")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn decide_s3() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s3.gm", S3);
    let out = lspace(&["decide", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        r#"{"verdict":"L_SPACE","taut_foliation":false,"left_orderable":false,"h1_order":1}"#
    );
}

#[test]
fn decide_brieskorn_237() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "b.gm", BRIESKORN_237);
    let out = lspace(&["decide", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "NON_L_SPACE");
    assert_eq!(v["taut_foliation"], true);
    assert_eq!(v["left_orderable"], true);
    assert_eq!(v["h1_order"], 1);
}

#[test]
fn decide_reports_not_qhs() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s1s2.gm", S1_S2);
    let out = lspace(&["decide", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "NOT_QHS");
    assert_eq!(v["h1_order"], "INFINITE");
}

#[test]
fn errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.gm", "piece A sfs(0) boundaries 1\nglue A.1 C.1 [0,1;1,0]\n");
    let out = lspace(&["decide", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(lspace(&["decide", "/nonexistent/file.gm"]).status.code(), Some(1));
    let det = write(&dir, "det.gm", &S3.replace("[0,1;1,0]", "[1,0;0,1]"));
    assert_eq!(lspace(&["decide", s(&det)]).status.code(), Some(1));
}

#[test]
fn certify_and_verify_round_trip() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("splice.gm", SPLICE), ("three.gm", THREE), ("b.gm", BRIESKORN_237)] {
        let f = write(&dir, name, text);
        let cert = dir.path().join(format!("{name}.cert"));
        let out = lspace(&["certify", s(&f), "--output", s(&cert)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let out = lspace(&["verify", s(&f), "--cert", s(&cert)]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["accepted"], true);
    }
}

#[test]
fn tampered_certificate_is_rejected() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "splice.gm", SPLICE);
    let out = lspace(&["certify", s(&f)]);
    let mut cert = json(&out);
    // the fiber slope is a strict L-space slope of P, so its N-filling is an L-space
    cert["edges"][0]["slope"] = Value::from("0/1");
    let tampered = write(&dir, "bad.cert", &cert.to_string());
    let out = lspace(&["verify", s(&f), "--cert", s(&tampered)]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    assert_eq!(report["accepted"], false);
    assert!(!report["mismatches"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));

    cert["edges"][0]["id"] = Value::from("e9");
    let unknown = write(&dir, "unknown.cert", &cert.to_string());
    assert_eq!(lspace(&["verify", s(&f), "--cert", s(&unknown)]).status.code(), Some(1));
    let garbage = write(&dir, "garbage.cert", "{not json");
    assert_eq!(lspace(&["verify", s(&f), "--cert", s(&garbage)]).status.code(), Some(1));
}

#[test]
fn certify_l_space_prints_null() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s3.gm", S3);
    let out = lspace(&["certify", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out), Value::Null);
}

#[test]
fn interval_on_a_cut_boundary() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "splice.gm", SPLICE);
    let out = lspace(&["interval", s(&f), "--boundary", "P.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["longitude"], "6/1");
    assert_eq!(v["exact"], true);
    assert_eq!(v["nlsInner"]["kind"], "ARC");
    assert_eq!(lspace(&["interval", s(&f), "--boundary", "P.3"]).status.code(), Some(1));
    assert_eq!(lspace(&["interval", s(&f), "--boundary", "Z.1"]).status.code(), Some(1));
}

#[test]
fn h1_json() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "l7.gm", "piece A sfs(0) boundaries 1\npiece B sfs(0) boundaries 1\nglue A.1 B.1 [2,1;7,3]\n");
    let out = lspace(&["h1", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["b1"], 0);
    assert_eq!(v["order"], 7);
    assert_eq!(v["torsion"], serde_json::json!([7]));
}

#[test]
fn loop_count_forms() {
    let out = lspace(&["loop-count", "--word", "d1 e"]);
    let v = json(&out);
    assert_eq!((v["black"].as_u64(), v["white"].as_u64()), (Some(2), Some(1)));
    let out = lspace(&["loop-count", "--relations", "0,2", "--alpha", "1,0", "--beta", "0,0"]);
    assert_eq!(json(&out)["loops"], 2);
    let out = lspace(&["loop-count", "--relations", "", "--alpha", "2", "--beta", "0"]);
    assert_eq!(json(&out)["loops"], 2);
    let out = lspace(&["loop-count", "--word", "c0"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    // trefoil exterior: H1 = Z generated by the meridian 1/0
    let f = write(&dir, "t.gm", "piece P sfs(-1; 1/2, 1/3) boundaries 1\n");
    let out = lspace(&["loop-count", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["loops"], 1);
}

#[test]
fn unknown_exits_two() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "undecided.gm", UNDECIDED);
    let out = lspace(&["decide", s(&f)]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["verdict"], "UNKNOWN");
    assert_eq!(v["taut_foliation"], Value::Null);
    assert_eq!(v["left_orderable"], Value::Null);
    assert_eq!(v["h1_order"], 3754);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--max-denominator"));
    assert_eq!(lspace(&["certify", s(&f)]).status.code(), Some(2));
}

#[test]
fn output_is_independent_of_jobs() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("three.gm", THREE), ("splice.gm", SPLICE)] {
        let f = write(&dir, name, text);
        for cmd in ["decide", "certify"] {
            let one = lspace(&[cmd, s(&f), "--jobs", "1"]);
            let many = lspace(&[cmd, s(&f), "--jobs", "8"]);
            assert_eq!(one.stdout, many.stdout, "{cmd} {name}");
            assert_eq!(one.status.code(), many.status.code());
        }
    }
}
