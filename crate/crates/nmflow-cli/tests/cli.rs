use std::path::Path;
use std::process::{Command, Output};

fn nmflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("NMFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary(dir: &Path, prefix: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(format!("{prefix}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn header(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn physicality_prints_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmflow(dir.path(), &["physicality", "--alpha", "0.4", "--check"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("T^(0.4) = 0.769"), "{}", stdout(&o));
    assert_eq!(header(dir.path(), "nmflow-physicality.csv"), "t,value");
    let s = summary(dir.path(), "nmflow-physicality");
    assert!((s["value"].as_f64().unwrap() - 0.7686).abs() < 1e-3);
    assert_eq!(s["pass"], true);
}

#[test]
fn eb_time_landmark() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmflow(dir.path(), &["eb-time", "--alpha", "0.4", "--t0", "2", "--check", "--out", "eb"]);
    assert_eq!(o.status.code(), Some(0));
    let t = summary(dir.path(), "eb")["value"].as_f64().unwrap();
    assert!((t - 1.47).abs() < 0.01, "{t}");
    assert_eq!(header(dir.path(), "eb.csv"), "t,value,flag");
}

#[test]
fn random_scan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["mi-scan", "--random", "40", "--seed", "3", "--t-max", "3.5"];
    let run = |out: &str| {
        let mut a = args.to_vec();
        a.extend(["--out", out]);
        assert_eq!(nmflow(dir.path(), &a).status.code(), Some(0));
        std::fs::read(dir.path().join(format!("{out}.csv"))).unwrap()
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    assert_eq!(header(dir.path(), "a.csv"), "t,value,derivative,flag");
    // a different worker count must not change the result
    let o = Command::new(env!("CARGO_BIN_EXE_nmflow"))
        .args(args)
        .args(["--out", "c"])
        .current_dir(dir.path())
        .env("NMFLOW_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn config_file_runs_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(
        &good,
        r#"{"experiment":"mi-scan","channel":{"family":"quasi_eternal","alpha":0.4,"t0":1.0},
            "grid":{"t_max":3.0,"step":0.01},"output":"from-config.csv"}"#,
    )
    .unwrap();
    let o = nmflow(dir.path(), &["--config", good.to_str().unwrap(), "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let onset = summary(dir.path(), "from-config")["value"].as_f64().unwrap();
    assert!((onset - 2.741).abs() < 0.005);

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"experiment":"teleport"}"#).unwrap();
    let o = nmflow(dir.path(), &["--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown experiment"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"experiment": "mi-scan", "grid": {"t_max": -1, "step": 0.1}}"#).unwrap();
    let o = nmflow(dir.path(), &["--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
}

#[test]
fn failed_check_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // the grid stops before the MI minimum, so no onset is found
    let o = nmflow(dir.path(), &["mi-scan", "--t-max", "2", "--check"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
    // without --check the same run succeeds
    let o = nmflow(dir.path(), &["mi-scan", "--t-max", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn library_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmflow(dir.path(), &["povm-bound", "--da", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_nmflow"))
        .args(["physicality"])
        .current_dir(dir.path())
        .env("NMFLOW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gadc_scan_writes_one_table_per_eps() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmflow(dir.path(), &["gadc-scan", "--eps", "1e-3,1e-4", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for f in ["nmflow-gadc-scan-eps1e-3.csv", "nmflow-gadc-scan-eps1e-4.csv"] {
        assert_eq!(header(dir.path(), f), "t,value,derivative,flag");
    }
    let s = summary(dir.path(), "nmflow-gadc-scan");
    assert_eq!(s["details"]["scans"].as_array().unwrap().len(), 2);
}

#[test]
fn probe_backflow_flags_increase_after_tau() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmflow(
        dir.path(),
        &["probe-backflow", "--alpha", "0.4", "--t0", "2", "--tau", "3", "--p", "0.2", "--step", "0.05", "--check"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = std::fs::read_to_string(dir.path().join("nmflow-probe-backflow.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value,derivative,flag"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let t: f64 = cols[0].parse().unwrap();
        if t > 3.0 + 1e-9 && t < 4.0 - 1e-9 {
            assert_eq!(cols[3], "1", "{line}");
        } else if t < 2.0 - 1e-9 {
            assert_eq!(cols[3], "0", "{line}");
        }
    }
    let s = summary(dir.path(), "nmflow-probe-backflow");
    assert!((s["value"].as_f64().unwrap() - 0.1).abs() < 1e-7);
}

#[test]
fn remaining_experiments_pass_their_checks() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["divisibility-scan", "--t-max", "3"],
        vec!["divisibility-scan", "--channel", r#"{"family":"dephasing","gamma":[[0.0,1.0],[2.0,-1.0]]}"#],
        vec!["hessian-check", "--draws", "10", "--check"],
        vec!["povm-bound", "--da", "8", "--db", "2", "--check"],
        vec!["pg-counterexample", "--check"],
    ] {
        let o = nmflow(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let s = summary(dir.path(), "nmflow-divisibility-scan");
    assert!(!s["details"]["classification"]["intervals"].as_array().unwrap().is_empty());
    let pg = summary(dir.path(), "nmflow-pg-counterexample")["value"].as_f64().unwrap();
    assert!((pg - 0.725).abs() < 1e-12);
}
