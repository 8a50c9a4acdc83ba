use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geomflow_core::io::{parse_cell, INVARIANT_COLUMNS, RMAX_COLUMNS, SURFACE_COLUMNS, TYPE_COLUMNS};

fn geomflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomflow")).args(args).env_remove("GEOMFLOW_OUT").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Data rows of a CSV file, after checking its header.
fn rows(path: &Path, header: &[&str]) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), header.join(","), "{}", path.display());
    lines.map(|l| l.split(',').map(|c| parse_cell(c).unwrap()).collect()).collect()
}

#[test]
fn rosenau_rmax_ends_at_coth_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ros");
    let res = geomflow(&["simulate", "--family", "rosenau", "--t0", "-2", "--t1", "-1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = rows(&out.join("rmax_series.csv"), &RMAX_COLUMNS);
    let last = table.last().unwrap();
    assert_eq!(last[0], -1.0);
    assert!((last[1] * 1f64.tanh() - 1.0).abs() < 1e-3, "{}", last[1]);
    assert!(table.windows(2).all(|w| w[1][0] > w[0][0]));
    for f in ["scenario.json", "checks.json", "diagnostics.json", "checkpoint_final.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn flat_invariants_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flat");
    let res = geomflow(&["invariants", "--family", "flat", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let table = rows(&out.join("invariants.csv"), &INVARIANT_COLUMNS);
    let r = &table[0];
    assert_eq!(r[1], 0.0);
    assert!((r[2] - TAU).abs() < 1e-9);
    assert_eq!(r[3], f64::INFINITY);
    assert!((r[4] - 1.0).abs() < 1e-9);
    assert_eq!(r[5], 0.0);
}

#[test]
fn cigar_scenario_writes_the_full_artifact_set() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_geomflow"))
        .args(["run", configs_dir().join("cigar_all.json").to_str().unwrap()])
        .env("GEOMFLOW_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    let expected = [
        "checkpoint_000.json",
        "checkpoint_final.json",
        "checks.json",
        "diagnostics.json",
        "embedding.json",
        "invariants.csv",
        "invariants.json",
        "residual_convergence.csv",
        "rmax_series.csv",
        "scenario.json",
        "surface.csv",
    ];
    assert_eq!(names, expected);
    let first = &rows(&dir.path().join("invariants.csv"), &INVARIANT_COLUMNS)[0];
    assert!((first[1] / TAU - 1.0).abs() < 0.01);
    assert!(first[2].abs() < 0.05);
    assert!((first[3] / TAU - 1.0).abs() < 0.01);
    assert!(first[4] < 0.02);
    assert!((first[5] - 4.0).abs() < 1e-6);
    let surface = rows(&dir.path().join("surface.csv"), &SURFACE_COLUMNS);
    assert!(surface.windows(2).all(|w| w[1][2] >= w[0][2] && w[1][1] >= w[0][1]));
    let checks: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("checks.json")).unwrap()).unwrap();
    assert!(checks.as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn classify_tables_rosenau() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let res = geomflow(&["classify", "--family", "rosenau", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let table = rows(&out.join("type_series.csv"), &TYPE_COLUMNS);
    assert!(table[0][2].is_nan());
    assert!(table[1..].iter().all(|r| r[2] > 1.5));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("type_verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["verdict"], "diverging");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = Command::new(env!("CARGO_BIN_EXE_geomflow"))
            .args(["simulate", "--family", "ds-soliton", "--outputs", "0.1,0.2"])
            .env("GEOMFLOW_OUT", out)
            .output()
            .unwrap();
        assert_eq!(code(&res), 0);
    }
    assert_eq!(std::fs::read_dir(&a).unwrap().count(), 7);
    let diff = geomflow_core::acceptance::differing_files(&a, &b).unwrap();
    assert!(diff.is_empty(), "{diff:?}");
}

#[test]
fn verify_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("first"), dir.path().join("second"));
    for out in [&a, &b] {
        let res = geomflow(&["verify", "--out", out.to_str().unwrap()]);
        let stdout = String::from_utf8_lossy(&res.stdout);
        assert_eq!(code(&res), 0, "{stdout}");
        assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 10);
    }
    let diff = geomflow_core::acceptance::differing_files(&a, &b).unwrap();
    assert!(diff.is_empty(), "{diff:?}");
    assert_eq!(std::fs::read_dir(&a).unwrap().count(), 9);
}

#[test]
fn resuming_from_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let res = geomflow(&["simulate", "--family", "ds-soliton", "--t1", "0.25", "--out", first.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let ckpt = first.join("checkpoint_final.json");
    let second = dir.path().join("second");
    let res = geomflow(&["simulate", "--checkpoint", ckpt.to_str().unwrap(), "--t1", "0.5", "--out", second.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = rows(&second.join("rmax_series.csv"), &RMAX_COLUMNS);
    assert_eq!(table[0][0], 0.25);
    assert_eq!(table.last().unwrap()[0], 0.5);
}

#[test]
fn failed_thresholds_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("strict");
    let res = geomflow(&[
        "simulate",
        "--family",
        "rosenau",
        "--tol",
        "solution_relative=1e-12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 1);
    assert!(String::from_utf8_lossy(&res.stdout).contains("[FAIL] simulate/sup_relative_error"));
    // files are still written
    assert!(out.join("rmax_series.csv").exists());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": ").unwrap();
    assert_eq!(code(&geomflow(&["run", bad.to_str().unwrap()])), 2);
    let typo = std::fs::read_to_string(configs_dir().join("flat_invariants.json")).unwrap().replace("\"cfl\"", "\"cfll\"");
    std::fs::write(&bad, typo).unwrap();
    assert_eq!(code(&geomflow(&["run", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&geomflow(&["run", dir.path().join("missing.json").to_str().unwrap()])), 2);
    assert_eq!(code(&geomflow(&["simulate", "--family", "torus"])), 2);
    assert_eq!(code(&geomflow(&["simulate"])), 2);
    assert_eq!(code(&geomflow(&["simulate", "--family", "flat", "--n", "8"])), 2);
    assert_eq!(code(&geomflow(&["classify", "--family", "cigar"])), 2);
    assert_eq!(code(&geomflow(&["embed", "--family", "rosenau"])), 2);
    // output directory nested under a regular file
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let res = geomflow(&["invariants", "--family", "flat", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("cannot write"));
}

#[test]
fn environment_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_geomflow"))
        .args(["invariants", "--family", "flat", "--out", dir.path().join("ignored").to_str().unwrap()])
        .env("GEOMFLOW_OUT", dir.path().join("chosen"))
        .output()
        .unwrap();
    assert_eq!(code(&res), 0);
    assert!(dir.path().join("chosen/invariants.csv").exists());
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn help_documents_every_csv_column() {
    let res = geomflow(&["--help"]);
    let help = String::from_utf8_lossy(&res.stdout).split_whitespace().collect::<Vec<_>>().join(" ");
    for cols in [&INVARIANT_COLUMNS[..], &RMAX_COLUMNS, &TYPE_COLUMNS, &SURFACE_COLUMNS, &geomflow::scenario::RESIDUAL_COLUMNS] {
        assert!(help.contains(&cols.join(", ")), "help lacks {cols:?}");
    }
    assert!(help.contains("GEOMFLOW_OUT"));
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        geomflow::config::ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
    }
}
