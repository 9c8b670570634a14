use std::process::{Command, Output};

use serde_json::Value;

use equimax::special::norm_cdf;

fn equimax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equimax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_emits_parseable_verdict() {
    let o = equimax(&["classify", "--k", "2", "--rho", "0.5", "--mu", " -0.5,-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "SINGLE_CROSSING");
    assert!(v["x0"].as_f64().unwrap() < 0.0);
    assert!(v["pdf_gap"].as_f64().unwrap() > 0.0);
    assert_eq!(v["certificate_grid"].as_array().unwrap().len(), 2);
}

#[test]
fn equals_syntax_for_negative_means() {
    let a = equimax(&["classify", "--rho", "0.5", "--mu=-0.5,-0.5"]);
    let b = equimax(&["classify", "--k", "2", "--rho", "0.5", "--mu", "-0.5"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cdf_csv_matches_phi() {
    let o = equimax(&["cdf", "--k", "1", "--rho", "0.3", "--mu", "0", "--grid", "-3:3:1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 8);
    assert_eq!(lines[0], "x,value");
    for line in &lines[1..] {
        let (x, f) = line.split_once(',').unwrap();
        let (x, f): (f64, f64) = (x.parse().unwrap(), f.parse().unwrap());
        assert!((f - norm_cdf(x)).abs() < 1e-10, "{line}");
        // 17 significant digits
        assert_eq!(line.split_once(',').unwrap().1.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["pdf", "--rho", "0.6", "--mu", "0.1,-0.4,-1", "--grid", "-2:2:0.25"];
    assert_eq!(equimax(&args).stdout, equimax(&args).stdout);
    let args = ["sample", "--rho", "0.6", "--mu", "0.1,-0.4", "--n", "2000", "--seed", "9"];
    let a = equimax(&args);
    assert_eq!(a.stdout, equimax(&args).stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("index,x_star"));
    assert_eq!(text.lines().count(), 2001);
}

#[test]
fn verify_small_sweep() {
    let o = equimax(&["verify", "--probes", "30", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["probes"], 30);

    let o = equimax(&["verify", "--probes", "3", "--details", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("quantity,index,k,rho,nu0,nu,t,zeta,value,ok\n"));
}

#[test]
fn usage_errors_exit_one_with_single_line() {
    for args in [
        vec!["cdf", "--rho", "0.5", "--mu", "0", "--grid", "0:1:0.1", "--nope"],
        vec!["cdf", "--rho", "0.5", "--mu", "zero", "--grid", "0:1:0.1"],
        vec!["cdf", "--rho", "0.5", "--mu", "0", "--grid", "0:1"],
        vec!["quantile", "--rho", "0.5", "--mu", "0", "--zeta", "1.5"],
        vec!["classify", "--rho", "0", "--mu", "0"],
        vec!["sample", "--rho", "0.5", "--mu", "0", "--n", "0"],
        vec!["frobnicate"],
    ] {
        let o = equimax(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn numerical_failure_exits_two() {
    // a tolerance no quadrature can meet
    let o = equimax(&["cdf", "--rho", "0.5", "--mu", "0,0", "--grid", "0:0:1", "--abs-tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corollary_table_and_partial_failure() {
    let o = equimax(&["corollary", "--rho", "0.5", "--mu", "0,0", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("zeta,kappa,shift,attained,margin"));
    assert_eq!(text.lines().count(), 5);
    for line in text.lines().skip(1) {
        let margin: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(margin > 0.0);
    }

    let o = equimax(&["corollary", "--rho", "0.5", "--mu", "0,0", "--zeta", "0.9,1.2", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn mc_check_reports_pass() {
    let o = equimax(&["mc-check", "--rho", "0.5", "--mu", "0,0", "--n", "20000", "--alpha", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["grid_points"], 50);
}

#[test]
fn crossing_and_timings() {
    let o = equimax(&["crossing", "--rho", "0.5", "--mu", "-0.5,-0.5", "--timings"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["conditional_dominance"], true);
    assert!(v["cdf_gap"].as_f64().unwrap().abs() < 1e-9);
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("elapsed_seconds:"));

    let o = equimax(&["crossing", "--rho", "0.5", "--mu", "0.2,-1", "--format", "plain"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("MAX_DOMINATES"));
}
