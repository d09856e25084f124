use std::process::{Command, Output};

fn hexcircuit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexcircuit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_prints_vectors_and_stats() {
    let o = hexcircuit(&["enumerate", "--tubes", "6"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 37 + 2);
    assert!(lines[0].starts_with("t=6;bits="));
    assert_eq!(lines[37], "tubes,solutions,combinations,wall_ms");
    assert!(lines[38].starts_with("6,37,104,"));
}

#[test]
fn enumerate_respects_cap() {
    let o = hexcircuit(&["enumerate", "--tubes", "14"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("override"));
}

#[test]
fn count_oracle_lists_published_deviation() {
    let o = hexcircuit(&["count-oracle", "--tubes", "10"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("10,4361,16032,3965,14976"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("note:"));
}

#[test]
fn simulate_vector_and_design_agree() {
    let v = hexcircuit(&["simulate", "--tubes", "8", "--vector", "t=8;bits=1000000000010101000000100001"]);
    let d = hexcircuit(&["simulate", "--tubes", "8", "--design", "1-2-7-8|4-3-6-5"]);
    assert!(v.status.success() && d.status.success());
    let a: serde_json::Value = serde_json::from_str(&stdout(&v)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&d)).unwrap();
    assert_eq!(a["q_w"], b["q_w"]);
    assert!(a["q_w"].as_f64().unwrap() > 1500.0);
}

#[test]
fn simulate_rejects_infeasible_vector() {
    let o = hexcircuit(&["simulate", "--tubes", "4", "--vector", "t=4;bits=111111"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn solve_writes_log_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hexcircuit(&[
        "solve", "--tubes", "6", "--solver", "evo", "--objective", "ratio", "--seed", "5", "--budget-evals", "50",
        "--q-lim", "3600", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["simulator_calls"].as_u64().unwrap() <= 50);
    let log = std::fs::read_to_string(dir.path().join("ratio_t6_evo_s5.jsonl")).unwrap();
    let simulated = log
        .lines()
        .filter(|l| l.contains("\"cache_hit\":false"))
        .count() as u64;
    assert_eq!(simulated, report["simulator_calls"].as_u64().unwrap());
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("config_sha256 = "));
    assert!(manifest.contains("seeds = 5"));
}

#[test]
fn compare_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hexcircuit(&["compare", "--tubes", "4", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("instance,objective,solver,seed,best_value,time_s,function_evaluations"));
    assert!(text.contains("geomean,q,direct"));
    let v = hexcircuit(&["verify", "--tubes", "6", "--objective", "q"]);
    assert!(v.status.success());
    assert_eq!(stdout(&v).lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn config_file_and_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("plan.toml");
    std::fs::write(&cfg, "[budget]\nmax_simulator_calls = 20\n").unwrap();
    let o = hexcircuit(&["solve", "--tubes", "8", "--solver", "local", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["simulator_calls"].as_u64().unwrap() <= 20);

    std::fs::write(&cfg, "[budget]\nmax_calls = 20\n").unwrap();
    let o = hexcircuit(&["solve", "--tubes", "8", "--solver", "local", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(hexcircuit(&["solve", "--tubes", "7", "--solver", "evo"]).status.code(), Some(2));
    assert!(!hexcircuit(&["solve", "--tubes", "8", "--solver", "nomad"]).status.success());
}
