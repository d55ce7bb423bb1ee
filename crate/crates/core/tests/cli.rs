use std::process::{Command, Output};

use serde_json::Value;

const BESSEL_B: [&str; 8] = ["--nu", "0", "--alpha", "0", "--beta", "0", "--a", "-1"];

fn jbessel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jbessel")).args(args).output().expect("spawn jbessel")
}

fn with<'a>(cmd: &'a str, base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(base);
    v.extend_from_slice(extra);
    v
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn error_of(o: &Output) -> Value {
    let v: Value = serde_json::from_slice(&o.stderr).expect("stderr is json");
    assert_eq!(v["schema_version"], 1);
    v["error"].clone()
}

#[test]
fn coeffs_csv() {
    let o = jbessel(&with("coeffs", &BESSEL_B, &["--class", "B", "--n", "4", "--format", "csv"]));
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "n,c_n,abs_ratio,ln_abs_c_n");
    assert_eq!(lines.len(), 6);
    // c_n = (-1)^n / (n!)^2
    let c: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (n, want) in [1.0, -1.0, 0.25, -1.0 / 36.0, 1.0 / 576.0].iter().enumerate() {
        assert!((c[n] - want).abs() <= 1e-15 * want.abs(), "c_{n} = {}", c[n]);
    }
}

#[test]
fn coeffs_json_round_trip() {
    let o = jbessel(&with("coeffs", &BESSEL_B, &["--class", "A", "--n", "10"]));
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "coeffs");
    assert_eq!(v["params"]["a"], -1.0);
    let rows = v["coefficients"].as_array().unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0]["c"], 1.0);
    // class A, mu = 1, a = -1: F = cos z, c_1 = F''(0)/2
    assert!((rows[1]["c"].as_f64().unwrap() + 0.5).abs() < 1e-15);
}

#[test]
fn eval_matches_bessel() {
    let o = jbessel(&with("eval", &BESSEL_B, &["--class", "B", "--z", "1,0.25"]));
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let vals = v["values"].as_array().unwrap();
    // F(z) = J_0(2 sqrt z)
    let f1 = vals[0]["F"].as_f64().unwrap();
    assert!((f1 - 0.223_890_779_141_235_67).abs() < 1e-14);
    let f2 = vals[1]["F"].as_f64().unwrap();
    assert!((f2 - 0.765_197_686_557_966_6).abs() < 1e-14);
    assert!(vals[0]["error_bound"].as_f64().unwrap() < 1e-12);
}

#[test]
fn zeros_csv_and_json() {
    let o = jbessel(&with("zeros", &BESSEL_B, &["--class", "B", "--zeros", "3", "--format", "csv"]));
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("n,lambda,f_prime\r\n"));
    let l1: f64 = text.split("\r\n").nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let want = (2.404_825_557_695_773_f64 / 2.0).powi(2);
    assert!((l1 - want).abs() < 1e-12 * want);

    let v = json(&jbessel(&with("zeros", &BESSEL_B, &["--class", "B", "--zeros", "12"])));
    assert_eq!(v["zeros"].as_array().unwrap().len(), 12);
    assert!(v["summability"]["exponent"].is_number());
}

#[test]
fn zero_count_rejected() {
    let o = jbessel(&with("zeros", &BESSEL_B, &["--class", "B", "--zeros", "0"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert_eq!(error_of(&o)["kind"], "ConfigError");
}

#[test]
fn invalid_parameters_are_reported() {
    let o = jbessel(&["coeffs", "--nu", "0", "--alpha", "0", "--beta", "0", "--a", "0", "--class", "B"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["kind"], "ConstraintViolation");

    let o = jbessel(&["coeffs", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["kind"], "usage");
}

#[test]
fn verify_passes_bessel_case_and_reruns_identically() {
    let args = with("verify", &BESSEL_B, &["--class", "B", "--zeros", "20", "--kernel-terms", "20"]);
    let a = jbessel(&args);
    let b = jbessel(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["schema_version"], 1);
    let checks = v["checks"].as_array().unwrap();
    for name in ["coefficient_forms", "order_law", "ode_coefficients", "bessel_reduction", "integral_equation_b", "gram_orthogonality"] {
        let c = checks.iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("missing {name}"));
        assert_eq!(c["status"], "pass", "{name}");
        assert!(c["residual"].is_number() && c["tolerance"].is_number());
    }
}

#[test]
fn perturbed_coefficients_fail() {
    let o = jbessel(&with("verify", &BESSEL_B, &["--class", "B", "--zeros", "10", "--kernel-terms", "10", "--perturb", "3:1.01"]));
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    let c = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "integral_equation_b").unwrap().clone();
    assert_eq!(c["status"], "fail");
    assert!(c["residual"].as_f64().unwrap() > 1e-4);
}

#[test]
fn conjecture_is_labeled_evidence() {
    let o = jbessel(&["conjecture", "--nu", "0", "--alpha", "0", "--beta", "1", "--a", "-1", "--class", "B", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.split("\r\n");
    assert_eq!(lines.next(), Some("name,residual,error_estimate,tolerance,status,error"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "gram_orthogonality");
    assert_eq!(row[4], "evidence");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# Bessel case\nnu = 0\nalpha = 0\nbeta = 0\na = -1\nclass = B\nn = 8\nformat = csv\n").unwrap();
    let out = dir.path().join("c.csv");
    let o = jbessel(&["coeffs", "--config", cfg.to_str().unwrap(), "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.split("\r\n").filter(|l| !l.is_empty()).count(), 5);

    std::fs::write(&cfg, "nu = 0\nmu = 1\n").unwrap();
    let o = jbessel(&["coeffs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["kind"], "ConfigError");
}
