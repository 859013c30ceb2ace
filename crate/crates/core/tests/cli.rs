use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfc")).args(args).output().unwrap()
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn critical_points_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfc(&["critical-points", "--p", "2", "3", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.697831"), "{text}");
    assert!(text.contains("0.771429"), "{text}");
    assert!(text.contains("0.745921"), "{text}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "critical-points");
    assert!(manifest["software"].as_str().unwrap().starts_with("pspin-qfc"));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn same_seed_gives_identical_csvs_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let d = dir.path().join(name);
        let out = qfc(&[
            "similarity",
            "--p",
            "3",
            "--s",
            "0.75",
            "--n-particles",
            "10000",
            "--steps",
            "3000",
            "--n-sim",
            "5",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs(&d)
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn symmetry_histogram_is_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let d = dir.path().join(name);
        let out = qfc(&[
            "symmetry",
            "--n-particles",
            "1000",
            "--runs",
            "64",
            "--steps",
            "500",
            "--seed",
            "5",
            "--workers",
            workers,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csvs(&d)
    };
    assert_eq!(run("one", "1"), run("four", "4"));
}

#[test]
fn a_manifest_reproduces_its_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = qfc(&[
        "dpt-scan",
        "--engine",
        "classical",
        "--p",
        "2",
        "--s",
        "0.6:0.72:0.01",
        "--steps",
        "20000",
        "--seed",
        "3",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let second = dir.path().join("second");
    let out = qfc(&[
        "dpt-scan",
        "--config",
        first.join("manifest.json").to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csvs(&first), csvs(&second));
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "experiment = \"optimal-mu\"\n[model]\np = [2, 3]\ns = \"0.5:0.7:0.1\"\n[protocol]\ndt = 0.01\n")
        .unwrap();
    let out_dir = dir.path().join("o");
    let out = qfc(&["optimal-mu", "--config", cfg.to_str().unwrap(), "--p", "4", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(out_dir.join("optimal_mu.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("4,")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(qfc(&["similarity", "--runs", "0", "--out", d]).status.code(), Some(2));
    assert_eq!(qfc(&["similarity", "--s", "1.5", "--out", d]).status.code(), Some(2));
    assert_eq!(qfc(&["dpt-scan", "--engine", "exact", "--n-particles", "5000", "--out", d]).status.code(), Some(2));
    assert_eq!(qfc(&["symmetry", "--engine", "classical", "--out", d]).status.code(), Some(2));
    assert_eq!(qfc(&["nonsense"]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(qfc(&["similarity", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    // a vanishing measurement resolution breaks every trajectory
    assert_eq!(qfc(&["dpt-scan", "--mu", "1e-300", "--steps", "100", "--out", d]).status.code(), Some(3));
    // no transition in the scanned window is reported, not fatal
    let out = qfc(&["dpt-scan", "--engine", "classical", "--s", "0.1:0.3:0.02", "--steps", "2000", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("no transition"));
}
