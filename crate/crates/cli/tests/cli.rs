//! End-to-end tests of the `nvlab` binary against golden files.
//!
//! Set `NVLAB_UPDATE_GOLDEN=1` to rewrite the golden files after an intended change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn nvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvlab"))
        .args(args)
        .env_remove("NVLAB_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn check_golden(name: &str, actual: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("NVLAB_UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(
        String::from_utf8_lossy(actual),
        String::from_utf8_lossy(&expected),
        "output differs from {}",
        path.display()
    );
}

#[test]
fn diagnose_distribution_golden() {
    let out = nvlab(&[
        "diagnose-distribution",
        "--pmf",
        "0.3,0.4,0.3",
        "--beta",
        "0.5",
    ]);
    assert!(out.status.success());
    check_golden("diagnose.csv", &out.stdout);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\ndelta,0.19999999999999996\n"));
    assert!(text.contains("\nkappa,0.0871766935723888"));
}

#[test]
fn diagnose_with_explicit_costs() {
    let out = nvlab(&[
        "diagnose-distribution",
        "--pmf",
        "0.5,0.5",
        "--h",
        "1",
        "--b",
        "9",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\ny_star,1\n"), "{text}");
    assert!(text.contains("\nq_star,0.5\n"), "{text}");
    assert!(text.contains("\ntheorem1,"), "{text}");
}

#[test]
fn bounds_report_golden() {
    let pmfs = golden_dir().join("pmfs.csv");
    let out = nvlab(&[
        "bounds-report",
        "--pmfs",
        pmfs.to_str().unwrap(),
        "--beta",
        "0.5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden("bounds_report.csv", &out.stdout);
    let text = String::from_utf8(out.stdout).unwrap();
    // (0.5, 0.5, 0) has no mass at the top level, so the bound is undefined.
    assert!(text.lines().nth(2).unwrap().ends_with(",none"));
}

#[test]
fn bounds_report_from_sampled_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    let out = nvlab(&[
        "bounds-report",
        "--K",
        "5",
        "--dbar",
        "4",
        "--seed",
        "9",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("k,f_hash,delta,kappa,tau,theorem1")
    );
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn run_experiment_golden() {
    let dir = tempfile::tempdir().unwrap();
    let config = golden_dir().join("small.toml");
    let out = nvlab(&[
        "run-experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    check_golden(
        "small_surface.csv",
        &fs::read(dir.path().join("surface.csv")).unwrap(),
    );
    check_golden(
        "small_detail.csv",
        &fs::read(dir.path().join("detail.csv")).unwrap(),
    );
    check_golden(
        "small_manifest.toml",
        &fs::read(dir.path().join("manifest.toml")).unwrap(),
    );
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_nvlab"))
        .args(["run-experiment", "--K", "2", "--L", "1", "--T", "9"])
        .env("NVLAB_OUTPUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["surface.csv", "detail.csv", "manifest.toml"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = nvlab(&[
            "run-experiment",
            "--K",
            "6",
            "--L",
            "3",
            "--T",
            "100",
            "--seed",
            "2",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for f in ["surface.csv", "detail.csv", "manifest.toml"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let bad_beta = nvlab(&["run-experiment", "--beta", "1.2"]);
    assert_eq!(bad_beta.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_beta.stderr).contains("beta"));

    assert_eq!(
        nvlab(&["run-experiment", "--K", "many"]).status.code(),
        Some(1)
    );
    assert_eq!(
        nvlab(&["diagnose-distribution", "--pmf", "0.6,0.6"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        nvlab(&["run-experiment", "--threads", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(nvlab(&["--help"]).status.code(), Some(0));

    let missing = nvlab(&["run-experiment", "--config", "/nonexistent/config.toml"]);
    assert_eq!(missing.status.code(), Some(1));

    // A regular file where the output directory should be.
    let file = tempfile::NamedTempFile::new().unwrap();
    let unwritable = nvlab(&[
        "run-experiment",
        "--K",
        "1",
        "--L",
        "1",
        "--T",
        "4",
        "--out",
        file.path().to_str().unwrap(),
    ]);
    assert_eq!(unwritable.status.code(), Some(2));
}
