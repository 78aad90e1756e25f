use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const FIG2: &str = r#"{ "type": "steps", "a": 0.7853981633974483,
    "eps": [0.2, 0.0853981633974483, 0.5], "beta": [-90.0, 0.0, -100.0] }"#;

fn run(command: &str, config: &str, out: &Path, threads: &str) -> Output {
    let path = out.with_extension("json");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ptlab"))
        .arg(command)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(out)
        .env("PTLAB_THREADS", threads)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!(
        r#"{{ "potential": {FIG2}, "params": {{ "k_range": [0.5, 12.0], "scan_step": 0.02 }} }}"#
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run("pte-scan", &config, &a, "1").status.code(), Some(0));
    assert_eq!(run("pte-scan", &config, &b, "4").status.code(), Some(0));
    let ptes = fs::read(a.join("ptes.csv")).unwrap();
    assert_eq!(ptes, fs::read(b.join("ptes.csv")).unwrap());
    assert!(String::from_utf8(ptes)
        .unwrap()
        .starts_with("k_star,mu_star,multiplicity,residual_F,residual_R"));
    assert_eq!(manifest(&a)["outcome"]["kind"], "discrete");
}

#[test]
fn transmission_rows_are_physical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let config = format!(
        r#"{{ "potential": {FIG2}, "params": {{ "k2": {{ "start": 1, "stop": 200, "step": 1 }} }} }}"#
    );
    assert_eq!(
        run("transmission", &config, &out, "0").status.code(),
        Some(0)
    );
    let mut rows = csv::Reader::from_path(out.join("transmission.csv")).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["k2", "T2", "R2", "argT"]);
    let mut n = 0;
    for r in rows.records() {
        let r = r.unwrap();
        let t2: f64 = r[1].parse().unwrap();
        let r2: f64 = r[2].parse().unwrap();
        assert!((t2 + r2 - 1.0).abs() < 1e-10);
        n += 1;
    }
    assert_eq!(n, 200);
}

#[test]
fn free_scan_is_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free");
    let config = r#"{ "potential": { "type": "square_well", "a": 1, "depth": 0 },
        "params": { "k_range": [0.01, 10] } }"#;
    assert_eq!(run("pte-scan", config, &out, "0").status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["outcome"]["kind"], "all_pass");
    assert!(
        m["tolerances"]["root_relative_residual"].is_number(),
        "{}",
        m["tolerances"]
    );
    assert_eq!(m["command"], "pte-scan");
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let config = r#"{ "potential": { "type": "steps", "a": 1, "eps": [0.1, 0.2], "beta": [1] },
        "params": { "k_range": [0.1, 5], "bogus": 1 } }"#;
    let o = run("pte-scan", config, &out, "0");
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("bogus"), "{stderr}");
    assert!(!out.join("manifest.json").exists());

    let o = run("pte-scan", "{}", &out, "zero");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .contains("PTLAB_THREADS"));
}

#[test]
fn numerical_failure_keeps_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inv");
    let config = format!(
        r#"{{ "potential": {FIG2}, "params": {{
            "v0": {{ "start": 0, "stop": 1, "step": 0.5 }},
            "seed_window": [40, 41], "k_max": 6,
            "alpha": {{ "start": 1.5, "stop": 2, "step": 0.1 }} }} }}"#
    );
    let o = run("inverse", &config, &out, "0");
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&out);
    assert_eq!(m["status"], "numerical_failure");
    assert!(m["failure"].is_string());
}
