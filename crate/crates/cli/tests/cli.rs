use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn exprise(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exprise"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = exprise(
        &["simulate", &config("default.toml"), "--out", "run", "--json"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("run/report.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
    for f in [
        "gate.csv",
        "v_out.csv",
        "rf.csv",
        "optical.csv",
        "detected.csv",
        "report.txt",
    ] {
        assert!(tmp.path().join("run").join(f).is_file(), "{f}");
    }
}

#[test]
fn sweep_prints_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let o = exprise(
        &[
            "sweep",
            &config("rise_17ns.toml"),
            "--param",
            "etalon.reflectivity",
            "--values",
            "0.97,0.95",
            "--out",
            "sw",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3, "{out}");
    assert!(out.lines().nth(1).unwrap().trim_start().starts_with("0.97"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("sw/sweep.json")).unwrap()).unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 2);
    assert!(tmp.path().join("sw/point_001/detected.csv").is_file());
}

#[test]
fn fit_recovers_written_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("time_s,value\n");
    for i in 0..400 {
        let t = i as f64 * 0.1e-9;
        text.push_str(&format!("{t:e},{:e}\n", (t / 12e-9).exp()));
    }
    std::fs::write(tmp.path().join("trace.csv"), text).unwrap();
    let o = exprise(
        &[
            "fit",
            "trace.csv",
            "--window",
            "1e-9,3.5e-8",
            "--direction",
            "rising",
            "--json",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let tau = fit["tau"].as_f64().unwrap();
    assert!((tau - 12e-9).abs() < 1e-3 * 12e-9, "{tau}");
}

#[test]
fn excite_accepts_external_pulse() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("time_s,real,imag\n");
    let tau = 2.0 * 26.2e-9;
    for i in 0..6000 {
        let t = i as f64 * 0.1e-9;
        let a = if t <= 500e-9 { ((t - 500e-9) / tau).exp() } else { 0.0 };
        text.push_str(&format!("{t:e},{a:e},0\n"));
    }
    std::fs::write(tmp.path().join("pulse.csv"), text).unwrap();
    let o = exprise(
        &[
            "excite",
            &config("default.toml"),
            "--pulse",
            "pulse.csv",
            "--json",
            "--out",
            "p.csv",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r["p_max"].as_f64().unwrap() > 0.999);
    assert!(tmp.path().join("p.csv").is_file());
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "[etalon]\nreflectivity = 1.5\n").unwrap();
    std::fs::write(tmp.path().join("typo.toml"), "[etalon]\nreflectivty = 0.9\n").unwrap();
    for args in [
        vec!["simulate", "bad.toml"],
        vec!["simulate", "typo.toml"],
        vec!["simulate", "missing.toml"],
        vec!["sweep", "bad.toml", "--param", "seed", "--values", "1"],
        vec![
            "sweep",
            &config("default.toml"),
            "--param",
            "etalon.nope",
            "--values",
            "1",
        ],
        vec!["fit", "x.csv", "--window", "1,2", "--direction", "sideways"],
        vec!["no-such-command"],
    ] {
        let o = exprise(&args, tmp.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn numerical_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("time_s,value\n");
    for i in 0..100 {
        text.push_str(&format!(
            "{:e},{}\n",
            i as f64 * 1e-9,
            if i % 2 == 0 { 1.0 } else { 3.0 }
        ));
    }
    std::fs::write(tmp.path().join("zigzag.csv"), text).unwrap();
    let o = exprise(
        &["fit", "zigzag.csv", "--window", "0,9e-8", "--direction", "rising"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = exprise(&["simulate", &config("single_etalon.toml"), "-o", d], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["report.json", "optical.csv", "detected.csv"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(f)).unwrap(),
            std::fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}
