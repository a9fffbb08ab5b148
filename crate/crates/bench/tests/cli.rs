use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().expect("bench runs")
}

const QUICK: &str = r#"{
  "array": {"n_sensors": 15, "radius": 1.0},
  "sources": [{"azimuth_deg": 60.0, "elevation_deg": 45.0}],
  "snapshots": 100,
  "snr_db": [20],
  "trials": 2,
  "seed": 4,
  "estimators": ["grid-music"],
  "baseline": {"grid": {"n_az": 90, "n_el": 10}}
}"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "quick.json", QUICK);
    let out = dir.path().join("out");
    let o = bench(&["run", &file, "--out", out.to_str().unwrap(), "--parallel", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["quick.csv", "quick_plot.csv", "quick_atoms.csv", "quick_timing.csv"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let table = std::fs::read_to_string(out.join("quick.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("snr,20.0,grid-music,2,"), "{}", rows[1]);
}

#[test]
fn unknown_scenario_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = QUICK.replace("\"seed\": 4", "\"seed\": 4, \"sed\": 5");
    let file = write(dir.path(), "typo.json", &text);
    let o = bench(&["run", &file, "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sed"));
    assert!(!dir.path().join("typo.csv").exists());
}

#[test]
fn unknown_estimator_is_rejected() {
    let o = bench(&["sweep-snr", "--estimator", "esprit", "--trials", "1"]);
    assert!(!o.status.success());
}

#[test]
fn trials_flag_overrides_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "quick.json", QUICK);
    let out = dir.path().join("out");
    let o = bench(&["run", &file, "--trials", "3", "--seed", "9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("quick.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("snr,20.0,grid-music,3,"));
}

#[test]
fn oracle_check_passes() {
    let o = bench(&["oracle-check", "--trials", "5", "--seed", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}
