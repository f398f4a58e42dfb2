use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn crystal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crystal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr is one JSON object")
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn exact_v2_prints_closed_form() {
    let o = crystal(&["exact", "--v2", "--beta", "1,3,0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "v2 1.5");
}

#[test]
fn verdict_reports_transience_bound() {
    let o = crystal(&["verdict", "--beta", "1,60,1.5", "--n", "5"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["label"], "transient-proved");
    assert_eq!(v["transience_b"].as_f64(), Some(54.0));
}

#[test]
fn comb_case_mismatch_names_the_precondition() {
    let o = crystal(&["comb", "--beta", "2,3,1", "--n", "5", "--case", "e2", "--horizon", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let e = error_json(&o);
    assert_eq!(e["error"], "precondition");
    assert!(e["message"].as_str().unwrap().contains("beta2 < beta1 < beta0"));
}

#[test]
fn bad_input_gives_machine_readable_errors() {
    let o = crystal(&["speed", "--beta", "1,-3,2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "invalid_rate");

    let o = crystal(&["simulate", "--beta", "1,2,3", "--n", "3", "--engine", "euler"]);
    assert_eq!(error_json(&o)["error"], "unknown_engine");

    let o = crystal(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "usage");

    let o = crystal(&["exact", "--beta", "1,2,3"]);
    assert_eq!(error_json(&o)["error"], "precondition");
}

#[test]
fn no_output_directory_means_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_crystal"))
        .current_dir(dir.path())
        .args(["simulate", "--beta", "1,2,3", "--n", "3", "--horizon", "5"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn simulate_writes_comb_picture_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let o = crystal(&[
        "simulate",
        "--beta",
        "2,3,1",
        "--n",
        "100",
        "--horizon",
        "1000",
        "--snapshots",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&a), ["manifest.json", "trajectory.csv", "trajectory.json"]);
    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("time,site_1,site_2,"));
    assert!(lines[0].ends_with("site_100"));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    // The manifest and its bare config object both reproduce the run.
    let b = dir.path().join("b");
    let o = crystal(&[
        "simulate",
        "--config",
        a.join("manifest.json").to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());

    let bare = dir.path().join("config.json");
    fs::write(&bare, manifest["config"].to_string()).unwrap();
    let c = dir.path().join("c");
    let o = crystal(&["simulate", "--config", bare.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(c.join("trajectory.csv")).unwrap());

    let o = crystal(&["speed", "--config", a.join("manifest.json").to_str().unwrap()]);
    assert_eq!(error_json(&o)["error"], "usage");
}

#[test]
fn flags_equal_config_for_speed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let args = ["speed", "--beta", "1,3,2", "--n", "2", "--horizon", "200", "--replicas", "6", "--seed", "9"];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(crystal(&with_out).status.success());

    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"beta":"1,3,2","n":2,"boundary":"zero","init":null,"horizon":200.0,"replicas":6,"seed":9,"engine":"poisson"}"#,
    )
    .unwrap();
    let b = dir.path().join("b");
    let o = crystal(&[
        "speed",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--threads",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["speed.json", "speed_replicas.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn couple_preserves_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = crystal(&[
        "couple",
        "1,2,3@zero:0,0,0",
        "1,2,3@zero:1,0,2",
        "2,3,4@zero:1,0,2,0,0",
        "--horizon",
        "20",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(" 0 order changes"), "{}", stdout(&o));
    assert!(dir.path().join("couple_2.csv").exists());

    let o = crystal(&["couple", "3,2,1@zero:0,0"]);
    assert_eq!(error_json(&o)["error"], "precondition");
}

#[test]
fn exact_stationary_and_comb_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = crystal(&[
        "exact",
        "--stationary",
        "--beta",
        "1,3,2",
        "--n",
        "2",
        "--truncation",
        "30",
        "--comb-set",
        "e1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    // e1 needs beta2 < beta0 <= beta1; (1,3,2) violates it.
    assert_eq!(error_json(&o)["error"], "precondition");

    let o = crystal(&["exact", "--comb-set", "e1", "--beta", "2,3,1", "--n", "5"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("e1 2.0000,1.0000,2.0000,1.0000,2.0000"), "{out}");
    assert!(out.contains("e1 2.4000,2.4000,1.0000,2.4000,2.4000"), "{out}");
}

#[test]
fn exact_reports_threshold_and_stationary_law() {
    let dir = tempfile::tempdir().unwrap();
    let o = crystal(&[
        "exact",
        "--stationary",
        "--beta",
        "1,3,2",
        "--n",
        "2",
        "--truncation",
        "30",
        "--vitesse",
        "1",
        "--mu",
        "-1,0,1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("vitesse_threshold 54"), "{out}");
    assert!(out.contains("mu(0) 0.5"), "{out}");
    let o = crystal(&["exact", "--bound", "--beta", "1,60,1.5"]);
    assert_eq!(stdout(&o).trim(), "transience_bound 54");
    let csv = fs::read_to_string(dir.path().join("stationary.csv")).unwrap();
    assert!(csv.starts_with("h_1,pi"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("exact.json")).unwrap()).unwrap();
    let thr = report["stationary"]["throughput"].as_array().unwrap();
    assert!((thr[0].as_f64().unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn tail_and_dtilde_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = crystal(&[
        "tail",
        "--beta",
        "1,3,2",
        "--n",
        "3",
        "--horizon",
        "200",
        "--replicas",
        "200",
        "--out",
        d,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("alpha_hat "));
    let fit: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tail.json")).unwrap()).unwrap();
    assert_eq!(fit["horizons"].as_array().unwrap().len(), 3);

    let o = crystal(&["tail", "--beta", "1,3,2", "--n", "3", "--coord", "0"]);
    assert_eq!(error_json(&o)["error"], "precondition");

    let o = crystal(&[
        "dtilde",
        "--beta",
        "1,2,0",
        "--n",
        "1",
        "--replicas",
        "200",
        "--horizons",
        "50,100,200",
        "--dstep",
        "0.25",
        "--out",
        d,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let est: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("dtilde.json")).unwrap()).unwrap();
    let d_hat = est["d_hat"].as_f64().unwrap();
    assert!((1.0..=2.0).contains(&d_hat));
}

#[test]
fn sweep_resumes_to_identical_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let args = |b2: &str| {
        vec![
            "sweep".to_string(),
            "--n".into(),
            "3".into(),
            "--beta1-grid".into(),
            "1.5,2".into(),
            "--beta2-grid".into(),
            b2.to_string(),
            "--horizon".into(),
            "100".into(),
            "--replicas".into(),
            "2".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let run = |b2: &str| {
        let a = args(b2);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = crystal(&refs);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run("0.5");
    let o = run("0.5,1.5");
    assert!(stdout(&o).starts_with("4 points"));
    let resumed = fs::read(out.join("sweep.csv")).unwrap();

    let fresh = dir.path().join("f");
    let mut a = args("0.5,1.5");
    *a.last_mut().unwrap() = fresh.to_str().unwrap().to_string();
    let refs: Vec<&str> = a.iter().map(String::as_str).collect();
    assert!(crystal(&refs).status.success());
    assert_eq!(resumed, fs::read(fresh.join("sweep.csv")).unwrap());
    assert_eq!(files_in(&fresh), ["manifest.json", "sweep.csv", "sweep.json"]);
}
