use std::process::{Command, Output};

use serde_json::Value;

fn tricrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tricrit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&tricrit(args))).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn tricritical_point_json() {
    let v = json(&["tricritical"]);
    assert!((v["g_c"].as_f64().unwrap() + 3.2103).abs() < 2e-4);
    assert!((v["nu_c"].as_f64().unwrap() - 2.0772).abs() < 2e-4);
    assert!((v["M2"].as_f64().unwrap() - 1.4478).abs() < 1e-3);
}

#[test]
fn classify_dense_sample_point() {
    let v = json(&["classify", "--g", "-4.4", "--nu", "4.21"]);
    assert_eq!(v["label"], "Dense");
    assert!(v["t0"].as_f64().unwrap() > 0.0);
}

#[test]
fn free_walk_potential_round_trips() {
    let out = stdout(&tricrit(&[
        "potential",
        "--g",
        "0",
        "--nu",
        "1",
        "--u",
        "0",
        "--t-grid",
        "0:10:11",
    ]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["t", "V", "Vp", "Vpp", "Vppp", "Vdot", "Vdotp"]);
    assert_eq!(rows.len(), 11);
    for r in rows {
        let t: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - 0.5 * t).abs() < 1e-12, "{t} {v}");
    }
}

#[test]
fn table_as_json() {
    let v = json(&[
        "finite-n", "--g", "0", "--nu", "1", "--u", "0", "--N", "3,10", "--format", "json",
    ]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!((r["chi"].as_f64().unwrap() - 1.0).abs() < 1e-8);
        assert!((r["el"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn boundary_contains_tricritical_row() {
    let out = stdout(&tricrit(&[
        "boundary", "--g-min", "-3.4", "--g-max", "-3.0", "--step", "0.1",
    ]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["g", "nu", "kind", "t0"]);
    let kinds: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert!(kinds.contains(&"tricritical") && kinds.contains(&"first-order") && kinds.contains(&"second-order"));
    for r in rows.iter().filter(|r| r[2] == "first-order") {
        assert!(r[3].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn scan_writes_one_row_per_point() {
    let out = stdout(&tricrit(&[
        "scan",
        "--g-range",
        "-2.7:-2.7",
        "--nu-range",
        "1.2:1.5",
        "--resolution",
        "1,2",
    ]));
    let (_, rows) = csv_rows(&out);
    let labels: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(labels, ["Dense", "Dilute"]);
}

#[test]
fn mc_is_deterministic_across_thread_caps() {
    let args = [
        "mc",
        "--g",
        "0",
        "--nu",
        "1",
        "--N",
        "3",
        "--samples",
        "5000",
        "--seed",
        "9",
    ];
    let a = tricrit(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_tricrit"))
        .args(args)
        .env("TRICRIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&a), stdout(&b));
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["seed"], 9);
    assert!(v["chi"]["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"u": 1.0, "g": -2.7, "nu": 1.5}"#).unwrap();
    let out = dir.path().join("report.json");
    let o = tricrit(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["label"], "Dilute");
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"g": -2.7, "nu": 1.5, "gamma": 1}"#).unwrap();
    let o = tricrit(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(tricrit(&["classify", "--g", "1"]).status.code(), Some(2));
    assert_eq!(
        tricrit(&["mc", "--g", "0", "--nu", "1", "--N", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(tricrit(&["verify", "--criteria", "13"]).status.code(), Some(2));
    assert_eq!(tricrit(&["nonsense"]).status.code(), Some(2));
    // the dilute direction asked for on the dense side
    let o = tricrit(&[
        "approach",
        "--base",
        "tricritical",
        "--direction",
        "-1,-1",
        "--side",
        "dilute",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_subset_passes() {
    let o = tricrit(&["verify", "--criteria", "2,4"]);
    let s = stdout(&o);
    assert!(
        s.contains("criterion  2 PASS") && s.contains("criterion  4 PASS"),
        "{s}"
    );
}

#[test]
fn approach_fit_in_json() {
    let v = json(&[
        "approach",
        "--base",
        "tricritical",
        "--direction",
        "1,-1.4478194780074",
        "--format",
        "json",
    ]);
    assert_eq!(v["side"], "dense");
    assert!((v["fit"]["exponent"].as_f64().unwrap() - 1.0).abs() < 0.02);
}
