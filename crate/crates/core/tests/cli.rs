use std::process::{Command, Output};

use cteleport::cli::{run_cli_with, TraceDocument};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cteleport"))
        .args(args)
        .output()
        .expect("spawn cteleport")
}

fn in_process(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cteleport").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn worked_example_trace() {
    let (code, out, _) = in_process(&[
        "run",
        "--n",
        "1",
        "--state",
        "0.5 0.5,0 0,-0.5 0.5",
        "--forced",
        "psi-,phi-,psi-",
    ]);
    assert_eq!(code, 0);
    let doc = TraceDocument::from_json(&out).unwrap();
    assert_eq!(doc.v_total, 0);
    assert!((doc.fidelity - 1.0).abs() < 1e-10);
    assert_eq!(doc.ledger.len(), 3);
    let rule = doc.correction.unwrap();
    assert!(rule.apply_cnot);
}

#[test]
fn json_round_trips() {
    let (code, out, _) = in_process(&["run", "--n", "3", "--random", "--seed", "9"]);
    assert_eq!(code, 0);
    let doc = TraceDocument::from_json(&out).unwrap();
    assert_eq!(TraceDocument::from_json(&doc.to_json()).unwrap(), doc);
    assert_eq!(doc.to_json().trim_end(), out.trim_end());
}

#[test]
fn same_seed_same_bytes() {
    let a = bin(&["run", "--n", "2", "--random", "--seed", "42"]);
    let b = bin(&["run", "--n", "2", "--random", "--seed", "42"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&["run", "--n", "2", "--random", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.json");
    let o = bin(&["run", "--n", "1", "--random", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("written to") && !summary.contains('{'), "{summary}");
    let doc = TraceDocument::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.config.n, 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin(&["run"]).status.code(), Some(2));
    assert_eq!(
        bin(&["run", "--n", "1", "--random", "--forced", "phi+"]).status.code(),
        Some(2)
    );
    assert_eq!(bin(&["run", "--state", "1 0 0"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--state", "1 1 1 1"]).status.code(), Some(2));
    assert_eq!(bin(&["bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["verify", "--n", "3..1"]).status.code(), Some(2));
}

#[test]
fn slight_denormalization_warns() {
    let (code, _, err) = in_process(&["run", "--state", "0.7071068 0 0 0.7071068"]);
    assert_eq!(code, 0);
    assert!(err.contains("renormalized"));
}

#[test]
fn verify_passes_and_direct_fails() {
    let o = bin(&["verify", "--n", "0..3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = bin(&["verify", "--n", "1", "--variant", "direct"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tables_report_matches() {
    let (code, out, _) = in_process(&["tables", "--parity", "odd"]);
    assert_eq!(code, 0);
    assert!(out.contains("correction table: 16/16 rows match"), "{out}");
    assert!(out.contains("classical-secret table: 4/4"), "{out}");
    let (code, _, _) = in_process(&["tables", "--variant", "z-late-h"]);
    assert_eq!(code, 1);
}

#[test]
fn efficiency_lines() {
    let (code, out, _) = in_process(&["efficiency", "--n", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("eta_q = 0.3333"), "{out}");
}

#[test]
fn qss_commands() {
    let (code, out, _) = in_process(&["qss", "classical", "--message", "1-", "--n", "2", "--seed", "5"]);
    assert_eq!(code, 0, "{out}");
    let (code, _, _) = in_process(&["qss", "classical", "--message", "0+", "--n", "1", "--exhaustive"]);
    assert_eq!(code, 0);
    let (code, _, _) = in_process(&["qss", "classical", "--message", "2+"]);
    assert_eq!(code, 2);
    let (code, out, _) = in_process(&["qss", "setup", "--rounds", "2000", "--intercept", "1.0", "--seed", "1"]);
    assert_eq!(code, 1);
    assert!(out.to_lowercase().contains("abort"), "{out}");
    let (code, _, _) = in_process(&["qss", "setup", "--rounds", "2000", "--seed", "1"]);
    assert_eq!(code, 0);
}

#[test]
fn silent_controller_leaves_session_unreconstructed() {
    let (code, out, _) = in_process(&["run", "--n", "2", "--random", "--silent", "1"]);
    assert_eq!(code, 1);
    let doc = TraceDocument::from_json(&out).unwrap();
    assert!(doc.guess_fidelity.unwrap() < 1.0);
}
