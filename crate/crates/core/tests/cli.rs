use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gtent(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtent")).arg("--out").arg(dir).args(args).output().expect("binary runs")
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("session.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn grid_in_the_plane_lists_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n = 2\n");
    let out = gtent(dir.path(), &["--config", &cfg, "grid", "--from", "0", "--to", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path(), "grid.json");
    let counts: Vec<usize> = v["layers"].as_array().unwrap().iter().map(|l| l["cubes"].as_array().unwrap().len()).collect();
    assert_eq!(counts, vec![4, 48, 768, 12288]);
    let svg = std::fs::read_to_string(dir.path().join("grid.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<rect").count() == 4 + 48 + 768 + 12288 + 1);
}

#[test]
fn missing_and_malformed_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = gtent(dir.path(), &["--config", "/nonexistent/session.toml", "grid"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = config(dir.path(), "n = 1\nwhat = 3\n");
    assert_eq!(gtent(dir.path(), &["--config", &cfg, "grid"]).status.code(), Some(2));
    let cfg = config(dir.path(), "q = 0.5\n");
    assert_eq!(gtent(dir.path(), &["--config", &cfg, "grid"]).status.code(), Some(2));
    assert_eq!(gtent(dir.path(), &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn ball_measures_and_unreachable_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = gtent(dir.path(), &["measure", "--center", "-0.5,1", "--radius", "0.4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path(), "measure.json");
    assert_eq!(v["estimate"]["method"], "quadrature");
    assert!(v["estimate"]["abs_error"].as_f64().unwrap() <= 1e-10);
    // Quasi-Monte Carlo cannot reach 1e-10 in three dimensions.
    let out = gtent(dir.path(), &["measure", "--center", "0.1,0.2,0.3", "--radius", "0.5"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = config(dir.path(), "[tolerances]\nball = 1e-4\n");
    let out = gtent(dir.path(), &["--config", &cfg, "measure", "--center", "0.1,0.2,0.3", "--radius", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cover_and_partition_write_figures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n = 2\n");
    let out = gtent(dir.path(), &["--config", &cfg, "cover", "--shape", "ball:0.5,0.5:1.2", "--shape", "box:-3,2:0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path(), "cover.json");
    assert!(!v["pieces"].as_array().unwrap().is_empty());
    assert!(dir.path().join("cover.svg").exists());

    let out = gtent(dir.path(), &["--config", &cfg, "partition", "--shape", "ball:0.5,0.5:1.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path(), "partition.json");
    assert_eq!(v["check"]["overlaps"], 0);
    let csv = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    assert!(csv.starts_with("# seed=1\ncell,x0,x1,pieces,phi_sum\n"));
}

#[test]
fn bad_shapes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = gtent(dir.path(), &["cover", "--shape", "ball:1,2:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gtent(dir.path(), &["cover", "--shape", "ring:1:0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tent_norm_and_aperture_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = gtent(dir.path(), &["--seed", "7", "tent-norm", "--function", "3", "--alpha", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(dir.path(), "tent-norm.json");
    assert_eq!(v["seed"], 7);
    assert!(v["norm"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("tent-norm.csv")).unwrap();
    assert!(csv.starts_with("# seed=7\ncell,x0,jf\n"));

    let out = gtent(dir.path(), &["aperture", "--count", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("aperture.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let ratio: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(ratio >= 1.0);
    }
}

#[test]
fn decompose_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = gtent(d, &["--seed", "3", "decompose", "--function", "1"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = std::fs::read(a.join("decompose.json")).unwrap();
    assert_eq!(first, std::fs::read(b.join("decompose.json")).unwrap());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert!(v["report"]["reconstruction_error"].as_f64().unwrap() <= 1e-9);
    assert!(!v["terms"].as_array().unwrap().is_empty());
}

#[test]
fn failed_suites_exit_one_and_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    // An envelope below 1 cannot hold.
    let cfg = config(dir.path(), "[tolerances]\nlambda_envelope = 0.5\n[samples]\ndecompositions = 2\n");
    let out = gtent(dir.path(), &["--config", &cfg, "verify-all", "--only", "8"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("FAILED suite 8") && err.contains("envelope"), "{err}");
}
