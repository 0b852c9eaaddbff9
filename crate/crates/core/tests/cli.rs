use std::process::{Command, Output};

use gdrate::{certify, CertifyConfig, ProblemInstance, VerificationReport};

fn gdrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdrate")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn rate_worked_case() {
    let o = gdrate(&["rate", "--N", "1", "--mu", "0", "--L", "1", "--gamma", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("bound") && l.ends_with("2.5000000000000000e-1")), "{text}");
    assert!(text.contains("gamma*L"));
}

#[test]
fn invalid_input_exits_2() {
    let o = gdrate(&["certify", "--N", "1", "--mu", "0", "--L", "1", "--gamma", "2.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let o = gdrate(&["rate", "--N", "1", "--mu", "0", "--L", "1", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = gdrate(&["rate", "--N", "0", "--mu", "0", "--L", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gdrate(&["optimal-step", "--N", "2", "--mu", "1", "--L", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gdrate(&["simulate", "--N", "2", "--mu", "0.5", "--L", "1", "--family", "huber"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_path_exits_1() {
    let o = gdrate(&["rate", "--N", "1", "--mu", "0", "--L", "1", "--out", "/nonexistent-dir/rates.txt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_rows_and_sentinels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let o = gdrate(&[
        "sweep", "--N", "2", "--mu", "0", "--L", "1", "--gamma-min", "0.1", "--gamma-max", "1.9", "--steps", "19",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "gamma,branch_mu,branch_rho,bound,min_form,regime");
    assert_eq!(lines.len(), 20);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "1.0000000000000001e-1");

    let o = gdrate(&["sweep", "--N", "2", "--mu=-0.5", "--L", "1", "--gamma-min", "0.2", "--gamma-max", "1.8", "--steps", "3"]);
    for row in stdout(&o).lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!((cols[1], cols[3]), ("nan", "nan"));
        assert!(cols[4].parse::<f64>().unwrap() > 0.0);
    }

    let o = gdrate(&["sweep", "--N", "2", "--mu", "0", "--L", "1", "--gamma-min", "0.1", "--gamma-max", "1.9", "--steps", "0"]);
    assert_eq!(stdout(&o), "gamma,branch_mu,branch_rho,bound,min_form,regime\n");
}

#[test]
fn certify_json_matches_library_report() {
    let o = gdrate(&["certify", "--N", "3", "--mu", "0.1", "--L", "2", "--gamma", "0.9", "--seed", "4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let parsed: VerificationReport = serde_json::from_str(&stdout(&o)).unwrap();
    let cfg = CertifyConfig { seed: 4, ..CertifyConfig::default() };
    let direct = certify(&ProblemInstance::new(3, 0.1, 2.0, 0.9).unwrap(), &cfg).unwrap();
    assert_eq!(parsed, direct);
    assert!(parsed.certified);
}

#[test]
fn optimal_step_default_gamma() {
    let o = gdrate(&["optimal-step", "--N", "1", "--mu", "0", "--L", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["optimal_stepsize"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let o = gdrate(&["rate", "--N", "1", "--mu", "0", "--L", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["normalized_stepsize"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((v["stepsize"].as_f64().unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn simulate_and_oracle_pass() {
    let o = gdrate(&["simulate", "--N", "4", "--mu", "0", "--L", "1", "--gamma", "1.0", "--family", "huber", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = gdrate(&["oracle", "--N", "3", "--mu=-0.1", "--L", "1", "--gamma", "1.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn help_documents_sentinel_and_exit_codes() {
    let o = gdrate(&["--help"]);
    let text = stdout(&o);
    assert!(text.contains("`nan`") && text.contains("Exit codes"), "{text}");
}
