use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_branchstable")).args(args).output().expect("binary runs")
}

fn records(out: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(out).lines().map(|l| serde_json::from_str(l).expect("json line")).collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("branchstable-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn regime_reference_point() {
    let o = run(&["regime", "--d", "5", "--alpha", "2", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.contains("κ = 2.5") && l.contains("regime 1")), "{text}");
    let recs = records(&o.stdout);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(recs[0]["config"]["d"], 5);
    assert!(recs[0]["wall_clock_budget_seconds"].as_f64().unwrap() > 0.0);
    let r = recs.iter().find(|r| r["record"] == "regime").unwrap();
    assert_eq!(r["kappa"].as_f64(), Some(2.5));
    assert_eq!(r["regime"], 1);
    assert_eq!(recs.last().unwrap()["record"], "summary");
}

#[test]
fn regime_two_and_grids() {
    let o = run(&["regime", "--d", "3", "--alpha", "1.2", "--beta", "0.45"]);
    assert_eq!(o.status.code(), Some(0));
    let r = records(&o.stdout).into_iter().find(|r| r["record"] == "regime").unwrap();
    assert_eq!(r["regime"], 2);
    assert!((r["kappa"].as_f64().unwrap() - 1.839_285_714_285_714).abs() < 1e-12);

    let o = run(&["regime", "--set", "d_grid=[1.0, 2.0, 3.0]", "--set", "gamma_grid=[0.5, 1.0]", "--alpha", "1.0", "--beta", "0.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&o.stdout);
    let rows: Vec<_> = recs.iter().filter(|r| r["record"] == "regime").collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0]["violated"].is_string());
    assert_eq!(recs.iter().filter(|r| r["record"] == "plane").count(), 2);
}

#[test]
fn constraint_violations_are_config_errors() {
    let o = run(&["regime", "--d", "2", "--alpha", "2", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha/beta < d < alpha(1+beta)/beta"));

    let o = run(&["codiff", "--set", "query=[0.0, 2.0, 1.0, 3.0]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 <= u < v < s < t"));

    let o = run(&["regime", "--set", "colour=3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["regime", "--alpha", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn boundary_override() {
    let o = run(&["regime", "--d", "2", "--alpha", "2", "--beta", "0.5", "--allow-boundary"]);
    assert_eq!(o.status.code(), Some(0));
    let r = records(&o.stdout).into_iter().find(|r| r["record"] == "regime").unwrap();
    assert_eq!(r["intermediate"], false);
}

#[test]
fn unreachable_tolerance_is_non_convergence() {
    let o = run(&["codiff", "--set", "rel_tol=1e-15", "--set", "t_points=5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(records(&o.stdout).last().unwrap()["status"], "non_convergence");
}

#[test]
fn config_file_then_flags() {
    let cfg = scratch("run.toml");
    std::fs::write(&cfg, "d = 3\nalpha = 1.2\nbeta = 0.45\nseed = 9\n").unwrap();
    let o = run(&["regime", "--config", cfg.to_str().unwrap(), "--beta", "0.6"]);
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&o.stdout);
    assert_eq!(recs[0]["seed"], 9);
    assert_eq!(recs[0]["config"]["beta"].as_f64(), Some(0.6));
    let r = recs.iter().find(|r| r["record"] == "regime").unwrap();
    assert_eq!(r["regime"], 2);
    assert!((r["kappa"].as_f64().unwrap() - 2.5 * (1.6 - 3.0 / 4.2)).abs() < 1e-12);
}

#[test]
fn reports_are_byte_identical() {
    let args = |out: &str, threads: &str| {
        vec![
            "simulate".to_string(),
            "--d=1".into(),
            "--alpha=0.5".into(),
            "--beta=0.6".into(),
            "--seed=42".into(),
            format!("--threads={threads}"),
            "--set=t_scale=2.0".into(),
            "--set=replicates=24".into(),
            "--set=paths=true".into(),
            format!("--output={out}"),
        ]
    };
    let (a, b, c) = (scratch("a.jsonl"), scratch("b.jsonl"), scratch("c.jsonl"));
    for (p, th) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let o = Command::new(env!("CARGO_BIN_EXE_branchstable"))
            .args(args(p.to_str().unwrap(), th))
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("flagged replicates"));
    }
    let (ra, rb, rc) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), std::fs::read(&c).unwrap());
    assert_eq!(ra, rb);
    // the thread count is part of the recorded config; everything else matches
    let strip = |r: &[u8]| records(r).into_iter().skip(1).collect::<Vec<_>>();
    assert_eq!(strip(&ra), strip(&rc));
    let recs = records(&ra);
    assert_eq!(recs.iter().filter(|r| r["record"] == "replicate").count(), 24);
    assert!(recs.last().unwrap().get("elapsed_seconds").is_none());
}

#[test]
fn verify_subset() {
    let o = run(&["verify", "--set", "criteria=[10, 12]"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&o.stdout);
    let crit: Vec<_> = recs.iter().filter(|r| r["record"] == "criterion").collect();
    assert_eq!(crit.len(), 2);
    assert!(crit.iter().all(|c| c["passed"] == true));
    let o = run(&["verify", "--set", "criteria=[13]"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn limit_tables() {
    let o = run(&["limit", "--set", "samples=2000", "--set", "times=[1.0]", "--set", "z_points=5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&o.stdout);
    let k = &recs.iter().find(|r| r["record"] == "constants").unwrap()["h"];
    assert!((k.as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-15);
    let rows: Vec<_> = recs.iter().filter(|r| r["record"] == "charfn").collect();
    assert_eq!(rows.len(), 5);
    for r in rows {
        let d = ((r["ecf_re"].as_f64().unwrap() - r["exact_re"].as_f64().unwrap()).powi(2)
            + (r["ecf_im"].as_f64().unwrap() - r["exact_im"].as_f64().unwrap()).powi(2))
        .sqrt();
        assert!(d < 0.1, "{r}");
    }
}
