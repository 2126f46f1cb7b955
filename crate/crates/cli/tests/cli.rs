//! End-to-end checks of the binary: exit codes, artifact emission,
//! determinism of emitted files, and scenario-file ingestion.

use std::path::PathBuf;
use std::process::{Command, Output};

fn lgot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

#[test]
fn exit_codes_follow_the_contract() {
    // passing parameterization
    let ok = lgot(&[
        "run",
        "builtin:delta_square",
        "-p",
        "delta=0.25",
        "--check-only",
    ]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));

    // violated condition
    let bad = lgot(&[
        "run",
        "builtin:delta_square",
        "-p",
        "delta=0.40",
        "--check-only",
    ]);
    assert_eq!(code(&bad), 2);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("H3") && text.contains("VIOLATED"), "{text}");

    // input errors
    let cantor = lgot(&["run", "builtin:cantor_square"]);
    assert_eq!(code(&cantor), 1);
    let err = String::from_utf8_lossy(&cantor.stderr);
    assert!(err.contains("singular-continuous"), "{err}");
    assert_eq!(code(&lgot(&["run", "no_such_file.toml"])), 1);
    assert_eq!(code(&lgot(&["run", "builtin:nope"])), 1);
}

#[test]
fn boundary_transport_reports_no_solution() {
    let out = lgot(&[
        "run",
        "builtin:edge_counterexample",
        "--atoms",
        "100",
        "--grid",
        "32",
    ]);
    assert_eq!(code(&out), 2);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("no trace-sense solution"), "{text}");
    assert!(text.contains("H2"), "{text}");
}

#[test]
fn artifacts_are_deterministic() {
    let dir1 = tempdir("lgot_art1");
    let dir2 = tempdir("lgot_art2");
    for dir in [&dir1, &dir2] {
        let out = lgot(&[
            "run",
            "builtin:delta_square",
            "--atoms",
            "120",
            "--grid",
            "32",
            "--seed",
            "7",
            "--oracle",
            "--out",
            dir.to_str().unwrap(),
            "--emit",
            "csv,svg",
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "report.txt",
        "verdicts.csv",
        "decomposition.csv",
        "rays.csv",
        "raster.csv",
        "u.csv",
        "oracle.csv",
        "figure.svg",
    ] {
        let a = std::fs::read(dir1.join(name)).unwrap_or_else(|_| panic!("{name} written"));
        let b = std::fs::read(dir2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // the ray endpoints re-parse to the same grid of atoms on a rerun
    let rays = std::fs::read_to_string(dir1.join("rays.csv")).unwrap();
    assert_eq!(rays.lines().count(), 121); // header + one row per atom
    for line in rays.lines().skip(1) {
        for v in line.split(',') {
            v.parse::<f64>().unwrap();
        }
    }
    cleanup(&dir1);
    cleanup(&dir2);
}

#[test]
fn scenario_files_run() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let out = lgot(&[
        "run",
        root.join("scenarios/delta_square.toml").to_str().unwrap(),
        "--atoms",
        "100",
        "--grid",
        "32",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = lgot(&[
        "run",
        root.join("scenarios/half_annulus.toml").to_str().unwrap(),
        "--atoms",
        "100",
        "--grid",
        "32",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_prints_frontier_and_writes_csv() {
    let dir = tempdir("lgot_scan");
    let out = lgot(&[
        "scan",
        "delta_square",
        "delta",
        "0.2",
        "0.4",
        "H3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("frontier = 2.92"), "{text}");
    let csv = std::fs::read_to_string(dir.join("scan_delta_square_delta.csv")).unwrap();
    assert!(csv.starts_with("param,verdict,margin"));
    assert!(csv.lines().count() > 10);
    cleanup(&dir);
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn cleanup(dir: &PathBuf) {
    let _ = std::fs::remove_dir_all(dir);
}
