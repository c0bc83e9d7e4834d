use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn billiard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(args)
        .env_remove("BILLIARD_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path)
        .expect("csv exists")
        .lines()
        .next()
        .unwrap_or_default()
        .to_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn kplus_sweep_writes_schema_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let out = billiard(&[
            "kplus",
            "--k",
            "200",
            "--alpha-sweep",
            "50:190:10",
            "--n-terms",
            "5000",
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(
        header(&a.join("kplus.csv")),
        "alpha_re,alpha_im,kplus_re,kplus_im,ratio_to_asymptotic_re,ratio_to_asymptotic_im"
    );
    let text = std::fs::read(a.join("kplus.csv")).unwrap();
    assert_eq!(text, std::fs::read(b.join("kplus.csv")).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 16);
    let m = manifest(&a);
    assert_eq!(m["command"], "kplus");
    assert_eq!(m["config"]["numerics"]["n_terms"], 5000);
}

#[test]
fn empty_sweep_is_rejected_without_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let out = billiard(&["kplus", "--k", "200", "--alpha-sweep", "190:50:1", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_sweep"));
    assert!(!dir.exists());
}

#[test]
fn threshold_wavenumber_is_a_numerical_abort() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let k = format!("{}", std::f64::consts::PI);
    let out = billiard(&["kplus", "--k", &k, "--alpha-sweep", "0.5:1:0.5", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.exists());
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let dir = blocker.join("run");
    let out = billiard(&["kplus", "--k", "20", "--alpha-sweep", "1:2:1", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "ensemble", "ensemble": {"kind": "A", "dim": 5, "realisations": 50}, "numerics": {"bins": 10, "s_max": 2.5}, "seed": 7}"#,
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = billiard(&[
        "ensemble",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "11",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("ensemble.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s_bin_center,density,law_reference_density,realisations,seed"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",50,11")));
    assert_eq!(manifest(&dir)["seed"], 11);

    let wrong = billiard(&["kplus", "--config", cfg.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn unknown_config_field_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"geometry": {"a": 1, "width": 2}}"#).unwrap();
    let out = billiard(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn output_root_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_billiard"))
        .args(["smatrix", "--a", "1", "--b", "1", "--h1", "0.3", "--k", "10.3"])
        .env("BILLIARD_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("smatrix");
    assert_eq!(header(&dir.join("s_tilde.csv")), "row,col,re,im");
    let defects: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("unitarity.json")).unwrap()).unwrap();
    assert!(defects["unitarity_defect"].as_f64().unwrap() < 1e-8);
}

#[test]
fn spectrum_and_trace_schemas() {
    let tmp = TempDir::new().unwrap();
    let spec = tmp.path().join("spectrum");
    let out = billiard(&[
        "spectrum", "--a", "1", "--b", "1", "--h1", "0.3", "--k-max", "12", "--output-dir", spec.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&spec.join("spectrum.csv")), "index,k_root,residual,flag");
    assert!(manifest(&spec)["summary"]["levels"].as_u64().unwrap() > 5);

    let tr = tmp.path().join("trace");
    let out = billiard(&[
        "trace", "--a", "1", "--b", "1", "--h1", "0.3", "--l-max", "5", "--q-dim", "40", "--k-max", "20",
        "--output-dir", tr.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&tr.join("orbits.csv")), "M,N,length,K,eta,amplitude");
    assert_eq!(header(&tr.join("qcheck.csv")), "R,M,N,y,trace_real,prediction,clustering_fraction");
    assert_eq!(header(&tr.join("lengthspec.csv")), "L,weight");
}

#[test]
fn stats_schemas() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("stats");
    let out = billiard(&[
        "stats", "--kind", "xi", "--dim", "60", "--realisations", "20", "--bins", "40", "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for n in 0..4 {
        assert_eq!(header(&dir.join(format!("p{n}.csv"))), "s,density,reference");
    }
    assert_eq!(header(&dir.join("form_factor.csv")), "tau,k_estimate,k_reference");
    assert_eq!(header(&dir.join("number_variance.csv")), "L,variance");
    assert!(manifest(&dir)["summary"]["compressibility"].is_number());
}
