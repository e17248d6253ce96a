//! Exit codes, output files and determinism of the command-line tool.

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    common::repo_root().join("configs").join(name)
}

fn run(cfg: &str, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proj-interior"))
        .arg("--config")
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dimension_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("sierpinski.json", dir.path(), &["dimension"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d = 1.584962500721"));
    assert!(stdout(&o).contains("verified"));
    let o = run("four-corner.json", dir.path(), &["dimension"]);
    assert!(stdout(&o).contains("d = 2.000000000000"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("malformed.json", dir.path(), &["dimension"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'c'"));
    let o = run("cantor-dust.json", dir.path(), &["build-l"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run("sierpinski.json", dir.path(), &["--rho", "2", "scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("sierpinski.json", dir.path(), &["--rho", "1e-7", "scan"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = run("four-corner.json", &blocker.join("sub"), &["render"]);
    assert!(!o.status.success());
}

#[test]
fn scan_csv_has_one_row_per_direction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("two.json");
    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(config("sierpinski.json")).unwrap()).unwrap();
    value["grid"] = serde_json::json!({"scan_directions": 2});
    fs::write(&cfg, value.to_string()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_proj-interior"))
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "scan"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "theta,l2_estimate,in_E");
    assert!(lines[3].starts_with("# excluded_fraction="));
}

#[test]
fn render_writes_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("sierpinski.json", dir.path(), &["render"]);
    assert!(o.status.success());
    let bytes = fs::read(dir.path().join("attractor.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5 512 512 255\n"));
    assert_eq!(bytes.len(), "P5 512 512 255\n".len() + 512 * 512);
}

#[test]
fn search_is_reproducible_from_the_echoed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--rho", "0.015625", "--budget", "20", "--seed", "9", "search"];
    let first = run("sierpinski.json", a.path(), &args);
    let second = run("sierpinski.json", b.path(), &args);
    assert!(second.status.success());
    assert!(first.status.success());
    assert!(stdout(&first).starts_with("seed = 9\n"));
    for name in ["search.json", "best_omega.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn certified_assignment_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("four-corner.json", dir.path(), &["--rho", "0.015625", "certify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("omega0 found"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("certify.json")).unwrap()).unwrap();
    let certs = report["certificates"].as_array().unwrap();
    assert_eq!(certs.len(), 10);
    for c in certs {
        // the perturbed four-corner set still projects onto nearly the unit interval
        let iv = &c["sampling"]["interval"];
        let width = iv["hi"].as_f64().unwrap() - iv["lo"].as_f64().unwrap();
        assert!(width >= 0.99, "{c}");
        assert_eq!(c["label"], "numerical certificate");
    }
    let gaps = fs::read_to_string(dir.path().join("gaps.csv")).unwrap();
    assert!(gaps.starts_with("theta,lo,hi,width\n"));

    let omega = dir.path().join("omega0.json");
    let o = run("four-corner.json", dir.path(), &["--rho", "0.015625", "verify", omega.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let verify: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(verify["omega_zero_on_net"], true);
    assert_eq!(verify["recurrence"]["fraction"], 1.0);
}
