use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polysmooth"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn constants_prints_closed_form() {
    let (code, stdout, _) = run(&["constants", "--name", "c_n_tau", "--params", r#"{"n":1,"tau":1}"#]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - (1.0 + (-1f64).exp())).abs() < 1e-12);
    assert!(stdout.contains("1.36787944"));
}

#[test]
fn unknown_suite_and_flags_exit_one() {
    assert_eq!(run(&["verify", "--suite", "nosuch"]).0, 1);
    assert_eq!(run(&["sample", "--measure", r#"{"family":"gaussian","dim":1}"#, "--nosuch"]).0, 1);
    assert_eq!(run(&["constants", "--name", "nosuch"]).0, 1);
}

#[test]
fn verify_shift_suite_reports_half_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, stdout, stderr) = run(&[
        "verify",
        "--suite",
        "cor5.1",
        "--measure",
        r#"{"family":"gaussian","dim":1}"#,
        "--poly",
        "x1^2",
        "--samples",
        "1000000",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert!(stdout.starts_with("PASS shift_tv"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let slope = v[0]["measured"]["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "{slope}");
}

#[test]
fn failing_suite_exits_two() {
    // declaring d = 1 for a quadratic demands a slope near 1 that the small-ball law cannot reach
    let (code, _, _) = run(&["verify", "--suite", "cw", "--poly", "x1^2", "--d", "1", "--deterministic"]);
    assert_eq!(code, 2);
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let (code, _, err) = run(&[
            "verify",
            "--suite",
            "cw",
            "--poly",
            "x1^2 + x1*x2",
            "--measure",
            r#"{"family":"gaussian","dim":2}"#,
            "--samples",
            "50000",
            "--seed",
            "5",
            "--threads",
            threads,
            "--deterministic",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        texts.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert!(!String::from_utf8_lossy(&texts[0]).contains("runtime_seconds"));
}

#[test]
fn plotdata_adds_log_series() {
    let (code, stdout, _) = run(&["verify", "--suite", "thm4.1", "--poly", "x1^3", "--plotdata", "--deterministic"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v[0]["plot"][0]["x"].as_array().unwrap().len(), 7);
    let (_, stdout, _) = run(&["verify", "--suite", "thm4.1", "--poly", "x1^3", "--deterministic"]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(v[0].get("plot").is_none());
}

#[test]
fn config_file_with_several_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    std::fs::write(
        &cfg,
        r#"[{"poly": "x1"}, {"poly": "x1 + x2", "measure": {"family": "gaussian", "dim": 2}}]"#,
    )
    .unwrap();
    let (code, stdout, _) = run(&["verify", "--suite", "poincare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let r: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["constant"].as_f64().unwrap()).collect();
    assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
    assert_eq!(v[1]["measured"]["suite_max_ratio"].as_f64().unwrap(), r[0]);
    std::fs::write(&cfg, r#"{"poly": "x1", "nosuch": 1}"#).unwrap();
    assert_eq!(run(&["verify", "--suite", "poincare", "--config", cfg.to_str().unwrap()]).0, 1);
}

#[test]
fn density_and_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let g = r#"{"family":"gaussian","dim":1}"#;
    assert_eq!(run(&["density", "--measure", g, "--poly", "x1", "--bins", "4000", "--out", a.to_str().unwrap()]).0, 0);
    assert_eq!(run(&["density", "--measure", g, "--poly", "x1 + 1", "--bins", "4000", "--out", b.to_str().unwrap()]).0, 0);
    let (code, stdout, err) = run(&["metrics", "--first", a.to_str().unwrap(), "--second", b.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let tv = v["tv"].as_f64().unwrap();
    assert!((tv - 0.7658).abs() < 2e-3, "{tv}");
    assert!(v["fm"].as_f64().unwrap() <= tv.min(v["w1"].as_f64().unwrap()) + 1e-9);
}

#[test]
fn sample_writes_csv() {
    let (code, stdout, _) = run(&["sample", "--measure", r#"{"family":"uniform_ball","dim":2}"#, "--samples", "100", "--seed", "1"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "x1,x2");
    assert_eq!(lines.len(), 101);
    let again = run(&["sample", "--measure", r#"{"family":"uniform_ball","dim":2}"#, "--samples", "100", "--seed", "1"]).1;
    assert_eq!(stdout, again);
}
