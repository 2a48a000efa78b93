use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn nmspdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmspdc"))
        .args(args)
        .env_remove("NMSPDC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = nmspdc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn eigvals_of_small_blocks() {
    let out = stdout(&["eigvals", "--N", "4"]);
    assert!(out.starts_with("N,j,lambda,approx_lambda,rel_err\n"));
    let lambdas: Vec<f64> = rows(&out).iter().map(|r| num(&r[2])).collect();
    assert_eq!(lambdas.len(), 3);
    for (got, want) in lambdas.iter().zip([-4.0, 0.0, 4.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let zero = rows(&stdout(&["eigvals", "--N", "0"]));
    assert_eq!(zero.len(), 1);
    assert_eq!(num(&zero[0][2]), 0.0);
}

#[test]
fn eigvals_central_window_has_approximation() {
    let out = rows(&stdout(&["eigvals", "--N", "202", "--central", "10"]));
    assert_eq!(out.len(), 21);
    let approx: Vec<&Vec<String>> = out.iter().filter(|r| !r[3].is_empty()).collect();
    assert_eq!(approx.len(), 10);
    assert!(approx.iter().all(|r| num(&r[2]) > 0.0));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["eigvals", "--N", "3"][..],
        &["eigvals", "--N", "-2"],
        &["evolve", "--beta", "-1"],
        &["evolve", "--beta", "1", "--tau", "soon"],
        &["--tail-eps", "2", "evolve", "--beta", "1"],
        &["--threads", "0", "evolve", "--beta", "1"],
        &["no-such-command"],
    ] {
        assert_eq!(nmspdc(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn measure_emits_json_outcome() {
    let out = stdout(&["measure", "--beta", "1.5", "--tau", "0", "--m", "2"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let p = v["probability"].as_f64().unwrap();
    let mu: f64 = 1.5 * 1.5;
    assert!((p - (-mu).exp() * mu * mu / 2.0).abs() < 1e-14);
    let signal = v["signal"].as_array().unwrap();
    assert!((signal[0]["re"].as_f64().unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn parity_table_closes() {
    let out = rows(&stdout(&["measure", "--beta", "2", "--parity"]));
    let total: f64 = out.iter().map(|r| num(&r[1])).sum();
    assert!((total - 1.0).abs() < 1e-10);
    assert!(out.iter().all(|r| r[2]
        == if (num(&r[0]) as usize).is_multiple_of(2) {
            "even"
        } else {
            "odd"
        }));
}

#[test]
fn evolve_keeps_norm() {
    let out = rows(&stdout(&["evolve", "--beta", "2", "--tau", "0.7"]));
    let norm: f64 = out
        .iter()
        .map(|r| num(&r[2]).powi(2) + num(&r[3]).powi(2))
        .sum();
    assert!((norm - 1.0).abs() < 1e-10);
}

#[test]
fn sweep_is_deterministic_and_matches_single_runs() {
    let args = ["sweep", "--beta", "3,4", "--m", "0-2"];
    let one = stdout(&[&["--threads", "1"][..], &args].concat());
    let auto = stdout(&args);
    assert_eq!(one, auto);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(
        lines[0],
        "beta,m,tau,probability,fidelity,beta_fit,r_fit,error"
    );
    assert_eq!(lines.len(), 7);
    let single = stdout(&["fit", "--beta", "4", "--m", "1"]);
    assert_eq!(single.lines().nth(1).unwrap(), lines[5]);
}

#[test]
fn empty_sweep_has_only_header() {
    let out = stdout(&["sweep", "--beta", "", "--m", "0"]);
    assert_eq!(
        out,
        "beta,m,tau,probability,fidelity,beta_fit,r_fit,error\n"
    );
}

#[test]
fn sweep_records_impossible_outcomes() {
    // tau = 0 leaves the pump coherent but a reading beyond the window is impossible
    let out = rows(&stdout(&[
        "sweep", "--beta", "0", "--m", "0,1", "--tau", "0",
    ]));
    assert!(out[0][7].is_empty());
    assert_eq!(out[1][7], "zero-probability outcome");
    assert!(out[1][4].is_empty());
}

#[test]
fn json_mirrors_csv() {
    let csv = rows(&stdout(&["overlap", "--n", "3"]));
    let json: Value =
        serde_json::from_str(&stdout(&["--format", "json", "overlap", "--n", "3"])).unwrap();
    let arr = json.as_array().unwrap();
    assert_eq!(arr.len(), csv.len());
    for (obj, row) in arr.iter().zip(&csv) {
        assert_eq!(obj["weight"].as_f64().unwrap(), num(&row[3]));
        assert_eq!(obj["j"].as_u64().unwrap().to_string(), row[1]);
    }
}

#[test]
fn writes_to_output_file() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("fig1.csv");
    let _ = std::fs::remove_file(&path);
    stdout(&["reproduce", "fig1", "--output", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path).unwrap();
    let data = rows(&text);
    for n in ["100", "101"] {
        let w: f64 = data.iter().filter(|r| r[0] == n).map(|r| num(&r[3])).sum();
        assert!((w - 1.0).abs() < 1e-10, "n = {n}");
    }
}

#[test]
fn fig6_even_readings_dominate() {
    let out = rows(&stdout(&["reproduce", "fig6", "--m-max", "200"]));
    let even: f64 = out
        .iter()
        .filter(|r| r[2] == "even")
        .map(|r| num(&r[1]))
        .sum();
    assert!((even - 0.87).abs() < 0.02, "{even}");
}

#[test]
fn hidden_oracle_agrees() {
    let help = stdout(&["--help"]);
    assert!(!help.contains("oracle"));
    let out = rows(&stdout(&["oracle", "--beta", "1", "--tau", "1"]));
    assert_eq!(out.len(), 7);
    assert!(out.iter().all(|r| num(&r[3]) <= 1e-10));
}
