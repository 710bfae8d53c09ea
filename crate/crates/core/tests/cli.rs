use std::path::Path;
use std::process::{Command, Output};

use symnet::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_symnet");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run symnet")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn config_file_drives_rus() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"n_supplementary": 2, "m_target": 2, "target_k": 1, "max_rounds": 1,
            "trajectories": 10000, "master_seed": 99,
            "outputs": {"output_dir": "out", "trajectories": "t.jsonl", "summary": "s.json"}}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["rus", "--config", "run.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("out/s.json"));
    let rate = s["success_rate"].as_f64().unwrap();
    let sigma = (4.0 / 9.0 * 5.0 / 9.0 / 10_000.0f64).sqrt();
    assert!((rate - 4.0 / 9.0).abs() < 4.0 * sigma, "{rate}");
    assert_eq!(s["master_seed"], 99);
    assert_eq!(s["per_round_first_success"].as_array().unwrap().len(), 1);

    let lines = std::fs::read_to_string(dir.path().join("out/t.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 10_000);
    let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    let keys: Vec<&String> = first.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
    assert!(lines.starts_with("{\"trajectory\":0,\"round\":1,\"time\":"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["rus", "--trajectories", "300", "--max-rounds", "3"];
    run(dir.path(), &[&base[..], &["--seed", "1", "--summary", "a.json", "--out", "a.jsonl"]].concat());
    run(dir.path(), &[&base[..], &["--seed", "2", "--summary", "b.json", "--out", "b.jsonl"]].concat());
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_ne!(a, b);
    assert_eq!(json(&dir.path().join("b.json"))["master_seed"], 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run(p, &["rus", "--trajectories", "0"]).status.code(), Some(2));
    assert_eq!(run(p, &["wstate", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(run(p, &["figure2", "--n-max", "7"]).status.code(), Some(2));
    assert_eq!(run(p, &["pt", "--n", "3", "--m", "3"]).status.code(), Some(2));
    assert_eq!(run(p, &["validate", "--n", "10", "--m", "7"]).status.code(), Some(2));
    assert_eq!(run(p, &["--config", "missing.json", "pt"]).status.code(), Some(2));
    std::fs::write(p.join("bad.json"), r#"{"unknown_field": 1}"#).unwrap();
    assert_eq!(run(p, &["--config", "bad.json", "pt"]).status.code(), Some(2));
    assert_eq!(run(p, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(p, &["pt"]).status.code(), Some(0));
}

#[test]
fn wstate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["wstate", "--m", "3", "--model", "xxz_tuned"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("wstate_report.json"));
    assert_eq!(r["lambda"], -1.0);
    assert_eq!(r["model"], "xxz_tuned");
    assert!(r["fidelity_at_schedule"].as_f64().unwrap() >= 1.0 - 1e-9);

    let out = run(dir.path(), &["wstate", "--m", "4", "--model", "xx_outer", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let curve = std::fs::read_to_string(dir.path().join("wstate.csv")).unwrap();
    let rows: Vec<Vec<f64>> = curve
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    // t = 0, π/4, π/2
    assert!((rows[1][0] - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
    assert!((rows[1][1] - 1.0).abs() < 1e-11);
    assert!(rows[0][1].abs() < 1e-12);
}

#[test]
fn validate_lists_mirror_two_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("validation.json"));
    let spec: Vec<f64> = r["collective_spectrum"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(spec, [-4.0, -2.0, 2.0]);
    assert_eq!(r["pass"], true);

    let out = run(dir.path(), &["validate", "--n", "3", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("validation.json"));
    for c in r["checks"].as_array().unwrap() {
        assert!(c["max_deviation"].as_f64().unwrap() < 1e-10, "{c}");
    }
}

#[test]
fn written_config_round_trips() {
    let cfg = RunConfig {
        n_supplementary: 4,
        m_target: 4,
        target_k: Some(2),
        master_seed: u64::MAX,
        timetable: vec![0.1, 1.0 / 3.0],
        ..RunConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let back = RunConfig::load(&path).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json(), cfg.to_json());
}
