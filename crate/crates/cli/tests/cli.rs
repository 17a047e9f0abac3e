use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn pdem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdem-cs")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    stdout(out).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn spectrum_exp_mass() {
    let out = pdem(&["spectrum", "--model", "exp-mass", "--mu", "1", "--nmax", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,E_n,R_n,rho_log_n\n"));
    let e: Vec<String> = csv_rows(&out).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(e, ["0", "1", "2", "3", "4", "5"]);
}

#[test]
fn spectrum_nonlinear() {
    let out = pdem(&["spectrum", "--model", "nonlinear-osc", "--lambda-prime", "0.1", "--alpha", "1", "--nmax", "2"]);
    let e: Vec<String> = csv_rows(&out).into_iter().map(|r| r[1].clone()).collect();
    assert_eq!(e, ["0.5", "1.7", "3.1"]);
}

#[test]
fn spectrum_ground_state_only() {
    let out = pdem(&["spectrum", "--model", "harmonic", "--nmax", "0"]);
    assert_eq!(csv_rows(&out).len(), 1);
}

#[test]
fn stats_exp_mass() {
    let out = pdem(&["stats", "--model", "exp-mass", "--mu", "1", "--z", "1"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows, vec![vec!["exp-mass", "", "1", "1", "1", "0", "Poissonian"]]);
}

#[test]
fn stats_json_has_both_methods() {
    let out = pdem(&["stats", "--model", "nonlinear-osc", "--lambda-prime", "0.1", "--z-re", "1", "--format", "json"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let series = &v[0]["series"];
    let closed = &v[0]["closed_form"];
    assert_eq!(series["classification"], "sub-Poissonian");
    let a = series["mandel_q"].as_f64().unwrap();
    let b = closed["mandel_q"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn stats_sweep_and_distribution() {
    let out = pdem(&[
        "stats", "--model", "bounded-osc", "--upsilon", "0.5", "--z-start", "0.5", "--z-stop", "2", "--z-step", "0.5",
    ]);
    assert_eq!(csv_rows(&out).len(), 4);
    let out = pdem(&["stats", "--model", "exp-mass", "--z", "1", "--distribution"]);
    let text = stdout(&out);
    assert!(text.starts_with("model,lambda_prime,z_abs,n,P_n\n"));
    let p1: f64 = csv_rows(&out)[1][4].parse().unwrap();
    assert!((p1 - (-1.0f64).exp()).abs() < 1e-14);
}

#[test]
fn coherent_vacuum() {
    let out = pdem(&["coherent", "--model", "nonlinear-osc", "--lambda-prime", "0.1", "--z", "0", "--nmax", "3", "--format", "csv"]);
    let c: Vec<(String, String)> = csv_rows(&out).into_iter().map(|r| (r[4].clone(), r[5].clone())).collect();
    assert_eq!(c, [("1", "0"), ("0", "0"), ("0", "0"), ("0", "0")].map(|(a, b)| (a.to_string(), b.to_string())));

    let out = pdem(&["coherent", "--model", "nonlinear-osc", "--lambda-prime", "0.1", "--z", "0"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dim"], 1);
    assert_eq!(v["coeffs"][0][1], 1.0);
}

#[test]
fn coherent_complex_label() {
    let out = pdem(&["coherent", "--model", "exp-mass", "--z", "-1+0.5i"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["z_re"], -1.0);
    assert_eq!(v["z_im"], 0.5);
}

#[test]
fn fig1_default_is_narrower() {
    let out = pdem(&["fig1", "--format", "json"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let panels = v["panels"].as_array().unwrap();
    assert_eq!(panels.len(), 4);
    let harmonic_var = panels[0]["variance"].as_f64().unwrap();
    let harmonic_peak = panels[0]["peak"].as_f64().unwrap();
    for p in &panels[1..] {
        assert!(p["variance"].as_f64().unwrap() < harmonic_var);
        assert!(p["peak"].as_f64().unwrap() > harmonic_peak);
    }
    let csv = pdem(&["fig1"]);
    assert!(stdout(&csv).starts_with("panel,lambda_prime,n,P_n\n"));
}

#[test]
fn moments_and_oracle_commands() {
    let out = pdem(&["moments", "--model", "exp-mass", "--nmax", "4"]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&out).len(), 5);
    let out = pdem(&["oracle", "--model", "nonlinear-osc", "--lambda-prime", "0.1"]);
    assert!(out.status.success());
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][6], "2000");
}

#[test]
fn verify_moments_only() {
    let out = pdem(&["verify", "--only", "moments", "--nmax", "8"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 27);
}

#[test]
fn verify_report_matches_schema() {
    let schema: Value =
        serde_json::from_str(include_str!("../../../schemas/verify-report.schema.json")).expect("schema parses");
    let item = &schema["items"];
    let required: Vec<&str> = item["required"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    let statuses: Vec<&Value> = item["properties"]["status"]["enum"].as_array().unwrap().iter().collect();

    let out = pdem(&["verify", "--only", "algebra,radius"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let records = report.as_array().unwrap();
    assert_eq!(records.len(), 6);
    for r in records {
        let obj = r.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        let mut want = required.clone();
        want.sort_unstable();
        assert_eq!(keys, want);
        assert!(obj["check_name"].is_string());
        assert!(obj["details"].is_string());
        assert!(statuses.contains(&&obj["status"]));
        assert!(obj["max_rel_error"].is_number() || obj["max_rel_error"].is_null());
    }
}

#[test]
fn verify_corruption_exits_one() {
    let out = pdem(&["verify", "--only", "algebra", "--corrupt-step", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.as_array().unwrap().iter().all(|r| r["status"] == "fail"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["stats", "--model", "nonlinear-osc"],
        vec!["stats", "--model", "exp-mass"],
        vec!["spectrum", "--model", "nonlinear-osc", "--lambda-tilde", "0.2"],
        vec!["spectrum", "--model", "bogus"],
        vec!["stats", "--model", "exp-mass", "--z", "1", "--eps", "2"],
        vec!["stats", "--model", "exp-mass", "--z-start", "0", "--z-stop", "1", "--z-step", "0"],
        vec!["oracle", "--model", "exp-mass", "--alpha", "1"],
        vec!["moments", "--model", "exp-mass", "--nmax", "13"],
        vec!["nonsense"],
    ] {
        let out = pdem(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let path = tmp("stats-config.json");
    std::fs::write(&path, r#"{"model": "exp-mass", "mu": 2.0, "z": "2", "format": "json"}"#).unwrap();
    let p = path.to_str().unwrap();

    let out = pdem(&["stats", "--config", p]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["series"]["mean"], 1.0);

    let out = pdem(&["stats", "--config", p, "--mu", "1"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["series"]["mean"], 4.0);

    std::fs::write(&path, r#"{"modle": "exp-mass"}"#).unwrap();
    assert_eq!(pdem(&["stats", "--config", p]).status.code(), Some(2));
}

#[test]
fn canonical_config_round_trips() {
    let out = pdem(&[
        "stats", "--model", "nonlinear-osc", "--lambda-prime", "0.17", "--z", "1+1i", "--eps", "1e-10", "--print-config",
    ]);
    assert!(out.status.success());
    let first = stdout(&out);
    let path = tmp("canonical.json");
    std::fs::write(&path, &first).unwrap();
    let again = pdem(&["stats", "--config", path.to_str().unwrap(), "--print-config"]);
    assert_eq!(stdout(&again), first);
}

#[test]
fn output_is_byte_stable_and_written_to_file() {
    let args = ["stats", "--model", "nonlinear-osc", "--lambda-prime", "0.07", "--z-start", "0", "--z-stop", "3", "--z-step", "0.25"];
    let a = pdem(&args);
    let b = pdem(&args);
    assert_eq!(a.stdout, b.stdout);

    let path = tmp("fig1.csv");
    let out = pdem(&["fig1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, stdout(&pdem(&["fig1"])));
    assert!(!text.contains('\r'));
}
