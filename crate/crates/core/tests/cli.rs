use std::process::Command;

use dpnoise::cli::dispatch;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dpnoise").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("dpnoise-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bounds_json() {
    let (code, out, _) = run(&[
        "bounds", "--cost", "l1", "--sensitivity", "3", "--delta", "0.05", "--epsilon", "0", "--dims", "1",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["v_lb"].as_f64().unwrap(), 14.5);
    assert_eq!(v["v_ub_uniform"].as_f64().unwrap(), 15.0);
    assert!(v["v_ub_laplace"].is_null());
}

#[test]
fn zero_privacy_is_a_domain_error() {
    let (code, out, err) = run(&["bounds", "--delta", "0", "--epsilon", "0", "--cost", "l1"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("(epsilon, delta) = (0,0) admits no finite-cost mechanism"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bounds", "--cost", "l7", "--delta", "0.1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["bounds", "--delta", "0.1"]).0, 2);
    let (code, _, err) = run(&["lp", "--cost", "l1", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("--bogus"));
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn tradeoff_region_csv() {
    let (code, out, _) = run(&["tradeoff-region", "--epsilon", "0", "--delta", "0.2"]);
    assert_eq!(code, 0);
    assert_eq!(out, "p_fa,p_md\n0,0.8\n0.4,0.4\n0.8,0\n");
    let (_, out, _) = run(&["tradeoff-region", "--epsilon", "0", "--delta", "0", "--point", "0.4,0.4", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["point_feasible"], Value::Bool(false));
}

#[test]
fn integrality_point_is_flagged() {
    let (code, out, _) = run(&["bounds", "--cost", "l1", "--delta", "0.03", "--format", "csv"]);
    assert_eq!(code, 0);
    let row = out.lines().nth(1).unwrap();
    let f: Vec<&str> = row.split(',').collect();
    assert_eq!(f.len(), 12);
    assert_eq!(f[7], "", "uniform bound must be blank: {row}");
    assert!(!f[5].is_empty(), "lower bound still filled: {row}");
    assert!(f[11].contains("integrality"));
}

#[test]
fn sweep_single_point_and_grid_order() {
    let (code, out, _) = run(&["sweep", "--cost", "l1", "--epsilon", "0", "--delta", "0.05", "--sensitivity", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    assert_eq!(
        out.lines().next().unwrap(),
        "epsilon,delta,sensitivity,dims,cost,v_lb,lb_method,v_ub_uniform,v_ub_laplace,v_ub_min,ratio,flags"
    );
    let (_, out, _) = run(&["sweep", "--cost", "l1", "--epsilon", "0.1,0.01", "--delta", "0.05,0.01"]);
    let keys: Vec<(String, String)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let want = [("0.1", "0.05"), ("0.1", "0.01"), ("0.01", "0.05"), ("0.01", "0.01")];
    assert_eq!(keys.len(), 4);
    for (k, w) in keys.iter().zip(want) {
        assert_eq!((k.0.as_str(), k.1.as_str()), w);
    }
}

#[test]
fn sweep_l1_ratio_trends_toward_constant() {
    let grid = "0.1,0.05,0.01,0.005,0.002,0.001";
    let (_, out, _) = run(&["sweep", "--cost", "l1", "--epsilon", grid, "--delta", grid, "--zip"]);
    let ratios: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(10).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 6);
    assert!(ratios.windows(2).all(|w| (w[1] - 1.322).abs() <= (w[0] - 1.322).abs()), "{ratios:?}");
    assert!((ratios[5] - 1.322).abs() < 0.005, "{ratios:?}");
}

#[test]
fn sweep_l2_zero_eps_ratio_tends_to_one() {
    let (_, out, _) = run(&["sweep", "--cost", "l2", "--epsilon", "0", "--delta", "0.05,0.01,0.005", "--sensitivity", "3"]);
    let ratios: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(10).unwrap().parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "{ratios:?}");
    assert!(ratios[2] < 1.01, "{ratios:?}");
}

#[test]
fn sweep_records_bad_points() {
    let (code, out, _) = run(&["sweep", "--cost", "l1", "--epsilon", "0", "--delta", "0,0.1"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",\"error: (epsilon, delta) = (0,0) admits no finite-cost mechanism\""), "{}", lines[1]);
}

#[test]
fn lp_and_certificate_commands() {
    let (code, out, _) = run(&["lp", "--cost", "l1", "--delta", "0.25", "--truncation", "20"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["optimal_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["status"], "optimal");
    assert!(v.get("pmf").is_none());
    let (code, _, err) = run(&["lp", "--cost", "l1", "--delta", "0.001", "--epsilon", "0.001", "--truncation", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("truncation"), "{err}");

    let (code, out, _) = run(&["certificate", "--cost", "l1", "--delta", "0.05", "--sensitivity", "3"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["feasible"], Value::Bool(true));
    assert_eq!(v["regime"], "zero_delta_1d");
    assert!((v["objective"].as_f64().unwrap() - 14.5).abs() < 1e-9);

    // round trip: build with weights, then verify the saved certificate
    let (_, out, _) = run(&["certificate", "--cost", "l2", "--epsilon", "0.1", "--delta", "0.1", "--dims", "2", "--with-weights"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let path = tmp("cert.json");
    std::fs::write(&path, &out).unwrap();
    let p = path.to_string_lossy().to_string();
    let (code, out, _) = run(&["certificate", "--cost", "l2", "--epsilon", "0.1", "--delta", "0.1", "--dims", "2", "--cert", &p]);
    assert_eq!(code, 0);
    let r: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["objective"], v["report"]["objective"]);
    // a stronger privacy requirement than the certificate's beta is rejected
    let (code, _, err) = run(&["certificate", "--cost", "l2", "--epsilon", "0.2", "--delta", "0.1", "--dims", "2", "--cert", &p]);
    assert_eq!(code, 1);
    assert!(err.contains("beta"), "{err}");
    // the bare certificate object is accepted too
    std::fs::write(&path, serde_json::to_string(&v["certificate"]).unwrap()).unwrap();
    let (code, out, _) = run(&["certificate", "--cost", "l2", "--epsilon", "0.1", "--delta", "0.1", "--dims", "2", "--cert", &p]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["objective"], v["report"]["objective"]);
}

#[test]
fn check_and_mechanism_cost_with_pmf_file() {
    let path = tmp("uniform.json");
    std::fs::write(&path, r#"{"type":"finite","offset":-2,"probs":[0.25,0.25,0.25,0.25]}"#).unwrap();
    let p = path.to_string_lossy().to_string();
    let (code, out, _) = run(&["check", "--pmf", &p, "--epsilon", "0", "--delta", "0.25"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["tightest_delta"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["satisfies"], Value::Bool(true));
    let (code, out, _) = run(&["mechanism-cost", "--cost", "l1", "--pmf", &p]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["expected_cost"].as_f64().unwrap(), 1.0);

    std::fs::write(&path, r#"{"type":"finite","offset":0,"probs":[0.5,0.6]}"#).unwrap();
    let (code, _, err) = run(&["check", "--pmf", &p, "--epsilon", "0.1"]);
    assert_eq!(code, 1);
    assert!(err.contains("sum to 1.1"), "{err}");
}

#[test]
fn table_cost_from_file() {
    let path = tmp("table.json");
    let values: Vec<f64> = (0..400).map(|k| (k as f64).sqrt()).collect();
    std::fs::write(&path, serde_json::to_string(&values).unwrap()).unwrap();
    let cost = format!("table:{}", path.display());
    let (code, out, err) = run(&["bounds", "--cost", &cost, "--delta", "0.05", "--sensitivity", "2"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["cost"], "table");
    assert!(v["v_lb"].as_f64().unwrap() <= v["v_ub_uniform"].as_f64().unwrap());
    // the Laplacian cost needs the whole tail, which the table does not give
    let (code, out, _) = run(&["bounds", "--cost", &cost, "--delta", "0.05", "--epsilon", "0.5"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["v_ub_laplace"].is_null());
}

#[test]
fn sample_is_reproducible_and_writes_out_file() {
    let a = run(&["sample", "--mechanism", "uniform", "--delta", "0.05", "--seed", "9", "--n", "100"]);
    let b = run(&["sample", "--mechanism", "uniform", "--delta", "0.05", "--seed", "9", "--n", "100"]);
    assert_eq!(a, b);
    assert_eq!(a.1.lines().count(), 100);
    assert!(a.1.lines().all(|l| (-10..10).contains(&l.parse::<i64>().unwrap())));
    let path = tmp("draws.csv");
    let p = path.to_string_lossy().to_string();
    let (code, out, _) = run(&["sample", "--mechanism", "uniform", "--delta", "0.05", "--seed", "9", "--n", "100", "--out", &p]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a.1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dpnoise");
    let ok = Command::new(bin).args(["tradeoff-region", "--epsilon", "0.6931471805599453", "--delta", "0.1"]).output().unwrap();
    assert!(ok.status.success());
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "p_fa,p_md\n0,0.9\n0.3,0.3\n0.9,0\n");
    let dom = Command::new(bin).args(["bounds", "--cost", "l1"]).output().unwrap();
    assert_eq!(dom.status.code(), Some(1));
    let usage = Command::new(bin).args(["bounds", "--cost"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
}
