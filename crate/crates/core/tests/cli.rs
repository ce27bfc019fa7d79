use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn opinion(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opinion")).args(args).current_dir(cwd).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn write_scenario(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, v.to_string()).unwrap();
    p
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn base() -> Value {
    json!({"model": {"na": 4, "no": 3, "alpha": 0.0, "beta": -1.0, "gamma": 0.2, "delta": 0.1, "lambda": 0.5}})
}

#[test]
fn analyze_reports_critical_values() {
    let dir = tempfile::tempdir().unwrap();
    let run = |file: &str| {
        let out = opinion(&["analyze", "--scenario", &scenario(file), "--out", "o"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        read_json(dir.path().join("o/analysis.json"))
    };
    let a = run("fig4_consensus.json");
    assert_eq!(a["kind"], "Consensus");
    assert!((a["lambda_crit"].as_f64().unwrap() - 1.0 / 3.1).abs() < 1e-9);
    assert!((a["lambda_crit_bisection"].as_f64().unwrap() - 1.0 / 3.1).abs() < 1e-6);
    assert_eq!(a["schema_version"], 1);
    let d = run("fig4_dissensus.json");
    assert_eq!(d["kind"], "Dissensus");
    assert!((d["lambda_crit"].as_f64().unwrap() - 1.0 / 0.6).abs() < 1e-9);
    let m = run("mode_interaction.json");
    assert_eq!(m["kind"], "ModeInteraction");
    assert!(m["warning"].is_string());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();

    fs::write(p.join("broken.json"), "{\"model\": ").unwrap();
    assert_eq!(opinion(&["analyze", "--scenario", "broken.json"], p).status.code(), Some(2));

    let mut v = base();
    v["model"]["lamda"] = json!(1.0);
    write_scenario(p, &v);
    assert_eq!(opinion(&["analyze", "--scenario", "scenario.json"], p).status.code(), Some(2));

    let mut v = base();
    v["model"]["beta"] = json!(1.0);
    write_scenario(p, &v);
    assert_eq!(opinion(&["analyze", "--scenario", "scenario.json"], p).status.code(), Some(3));

    assert_eq!(opinion(&["axials", "--na", "6", "--no", "5", "--mode", "dissensus", "--oracle"], p).status.code(), Some(4));

    let mut v = base();
    v["model"]["lambda"] = json!(5.0);
    v["sim"] = json!({"t_max": 50, "init_scale": 0.5, "divergence_bound": 0.2});
    write_scenario(p, &v);
    assert_eq!(opinion(&["simulate", "--scenario", "scenario.json"], p).status.code(), Some(5));
    assert!(!p.join("out").exists(), "nothing is written on failure");
}

#[test]
fn unknown_keys_fail_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    for path in [&["extra"][..], &["model", "extra"], &["sim", "extra"], &["analysis", "extra"]] {
        let mut v = base();
        v["sim"] = json!({"t_max": 1});
        let target = path[..path.len() - 1].iter().fold(&mut v, |acc, k| &mut acc[*k]);
        target[path[path.len() - 1]] = json!(0);
        write_scenario(dir.path(), &v);
        let out = opinion(&["simulate", "--scenario", "scenario.json"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{path:?}");
        assert!(!dir.path().join("out").exists());
    }
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("decay.json");
    for o in ["a", "b"] {
        let out = opinion(&["simulate", "--scenario", &sc, "--out", o], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trajectory.csv", "trajectory.dat", "trajectory.svg", "summary.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let s = read_json(dir.path().join("a/summary.json"));
    assert!(s["final_norm"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["seed"], 3);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(&["sweep", "--scenario", &scenario("sweep_consensus.json"), "--out", "s"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = read_json(dir.path().join("s/sweep.json"));
    assert!(!s["rows"].as_array().unwrap().is_empty());
    assert!(dir.path().join("s/sweep.csv").exists());
}

#[test]
fn axials_catalog_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = opinion(&["axials", "--na", "3", "--no", "3", "--mode", "dissensus", "--oracle"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("MATCH"));
    let a = read_json(dir.path().join("out/axials_3x3_dissensus.json"));
    assert_eq!(a["oracle"]["classes"].as_array().unwrap().len(), 2);

    let out = opinion(&["axials", "--na", "17", "--no", "3", "--mode", "dissensus"], dir.path());
    assert!(out.status.success());
    let a = read_json(dir.path().join("out/axials_17x3_dissensus.json"));
    assert_eq!(a["completeness"], "proven");
    assert_eq!(a["omitted"].as_array().unwrap().len(), 1);
    let names: Vec<&str> = a["records"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names.iter().filter(|n| **n == "Sigma_x_m").count(), 8);
    assert_eq!(names.iter().filter(|n| **n == "Sigma_S3_m").count(), 5);

    let out = opinion(&["axials", "--na", "4", "--no", "2", "--mode", "consensus"], dir.path());
    assert!(out.status.success());
    let a = read_json(dir.path().join("out/axials_4x2_consensus.json"));
    assert_eq!(a["records"].as_array().unwrap().len(), 1);
}
