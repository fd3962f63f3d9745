use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dgmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgmem")).args(args).output().unwrap()
}

fn run_ok(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["--example", "ex1", "--k", "1", "--levels", "4,8", "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = dgmem(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = run_ok(tmp.path(), &[]);
    for f in ["manifest.txt", "kernel_norms.txt", "results.csv", "results.md", "plot_grid.csv"] {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    assert!(!tmp.path().join("FAILED").exists());
    let csv = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert_eq!(csv, stdout);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,q,N,M,E_sup,rate,L2rho,rate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,0,4,4,"));
    assert!(lines[1].ends_with(",-"));
    let manifest = fs::read_to_string(tmp.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("result.status = ok"));
    let grid = fs::read_to_string(tmp.path().join("plot_grid.csv")).unwrap();
    assert!(grid.lines().count() > 64);
}

#[test]
fn runs_are_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(a.path(), &[]);
    run_ok(b.path(), &[]);
    for f in ["results.csv", "results.md", "plot_grid.csv", "kernel_norms.txt"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn manifest_reproduces_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_ok(a.path(), &["--rho", "1.5", "--no-plot"]);
    let manifest = a.path().join("manifest.txt");
    let out = dgmem(&["--config", manifest.to_str().unwrap(), "--out-dir", b.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(a.path().join("results.csv")).unwrap(),
        fs::read(b.path().join("results.csv")).unwrap()
    );
    assert!(!b.path().join("plot_grid.csv").exists());
}

#[test]
fn failed_run_leaves_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dgmem(&[
        "--example",
        "custom",
        "--kernel",
        "scalar_power(1,1.5)",
        "--levels",
        "4,8",
        "--out-dir",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(tmp.path().join("FAILED").is_file());
    let manifest = fs::read_to_string(tmp.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("result.status = failed"));
}

#[test]
fn invalid_levels_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dgmem(&["--levels", "4,6", "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
