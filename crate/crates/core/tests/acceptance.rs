//! One PASS/FAIL line per acceptance criterion, at the default session config.

use std::path::Path;
use std::process::Command;

use gtent::config::{SessionConfig, Tolerances};
use gtent::suites::{run_suite, Session, SuiteReport, SUITES};

/// Tolerances the criteria are stated with; the defaults must not drift.
fn pinned() -> Tolerances {
    Tolerances { ball: 1e-10, atom_norm: 0.05, holder: 1e-9, reconstruction: 1e-9, partition_sum: 1e-9, lambda_envelope: 3.0 }
}

fn line(id: u32, name: &str, passed: bool, detail: &str) {
    println!("{} [{id:>2}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
}

fn describe(r: &SuiteReport) -> String {
    let failed: Vec<String> = r.failures().map(|c| format!("{} = {} (limit {})", c.name, c.value, c.limit)).collect();
    if failed.is_empty() {
        let constants: Vec<String> = r.constants.iter().take(4).map(|(k, v)| format!("{k}={v:.4}")).collect();
        format!("{} checks; {}", r.checks.len(), constants.join(", "))
    } else {
        failed.join("; ")
    }
}

fn verify_all(out: &Path) -> (bool, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_gtent"))
        .args(["--seed", "1", "--out"])
        .arg(out)
        .arg("verify-all")
        .output()
        .expect("binary runs");
    let bytes = std::fs::read(out.join("verify-all.json")).unwrap_or_default();
    (status.status.success(), bytes)
}

#[test]
fn acceptance() {
    let cfg = SessionConfig::default();
    assert_eq!(cfg.tolerances, pinned());
    let session = Session::new(cfg).expect("default session");
    let mut all = true;
    for (id, name) in SUITES {
        let report = run_suite(id, &session).expect("suite runs");
        line(id, name, report.passed, &describe(&report));
        all &= report.passed;
    }

    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ok_a, first) = verify_all(&a);
    let (ok_b, second) = verify_all(&b);
    let identical = !first.is_empty() && first == second;
    line(12, "determinism", identical && ok_a && ok_b, &format!("{} bytes, identical = {identical}, exit ok = {}", first.len(), ok_a && ok_b));
    all &= identical && ok_a && ok_b;

    assert!(all, "some acceptance criteria failed");
}
