use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn dde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dde")).args(args).output().expect("binary runs")
}

fn run_config(args: &[&str], config: &Path, out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.extend(["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    dde(&all)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn edit_config(name: &str, dir: &Path, f: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = read_json(&configs().join(name));
    f(&mut v);
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(&v).unwrap()).unwrap();
    p
}

#[test]
fn solve_linear_bar() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["solve"], &configs().join("bar_linear.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("report.json"));
    assert!(report["result"]["d2"].as_f64().unwrap() < 1e-20);
    let z = std::fs::read_to_string(tmp.path().join("z.csv")).unwrap();
    assert!(z.starts_with("element,weight,eps_11,sig_11\n"));
    assert_eq!(z.lines().count(), 21);
}

#[test]
fn malformed_config_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edit_config("bar_linear.json", tmp.path(), |v| {
        v["solver"] = serde_json::json!({ "max_iter": 3 });
    });
    let o = run_config(&["solve"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_iter"));
    let cfg = edit_config("bar_linear.json", tmp.path(), |v| {
        v["material"].as_object_mut().unwrap().remove("c");
    });
    let o = run_config(&["solve"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`c`"));
    assert_eq!(dde(&["solve"]).status.code(), Some(1));
}

#[test]
fn forced_nonconvergence_exits_two_with_iterate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = edit_config("bar_two_well.json", tmp.path(), |v| {
        v["solver"] = serde_json::json!({ "max_iters": 1 });
    });
    let o = run_config(&["solve"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("z.csv").exists() && tmp.path().join("y.csv").exists());
    assert_eq!(read_json(&tmp.path().join("report.json"))["result"]["stop"], "max_iterations");
}

fn without_timing(path: &Path) -> Value {
    let mut v = read_json(path);
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn reruns_are_identical_and_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let cfg = configs().join("bar_two_well.json");
    for dir in [&a, &b] {
        assert_eq!(run_config(&["solve", "--seed", "3"], &cfg, dir).status.code(), Some(0));
    }
    for f in ["z.csv", "y.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let ra = without_timing(&a.join("report.json"));
    assert_eq!(ra, without_timing(&b.join("report.json")));
    assert_eq!(ra["seed"], 3);
    let echo = tmp.path().join("echo.json");
    std::fs::write(&echo, serde_json::to_string(&ra["config"]).unwrap()).unwrap();
    std::fs::create_dir_all(&c).unwrap();
    assert_eq!(run_config(&["solve"], &echo, &c).status.code(), Some(0));
    assert_eq!(without_timing(&c.join("report.json"))["result"], ra["result"]);
}

#[test]
fn convergence_table_and_precondition() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["convergence"], &configs().join("bar_convergence.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("convergence.csv")).unwrap();
    let errors: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
    assert!(read_json(&tmp.path().join("report.json"))["exponent"].as_f64().unwrap() > 0.5);
    let single = edit_config("bar_convergence.json", tmp.path(), |v| {
        v["sampling"].as_array_mut().unwrap().truncate(1);
    });
    assert_eq!(run_config(&["convergence"], &single, tmp.path()).status.code(), Some(1));
}

#[test]
fn relax_analyze_reports_extremes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["relax", "analyze"], &configs().join("relax_analyze.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("analyze.json"));
    assert!((r["alpha_minus"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!((r["alpha_plus"].as_f64().unwrap() - 4.0).abs() < 1e-6);
    assert_eq!(r["compatible"], false);
    let poly = std::fs::read_to_string(tmp.path().join("boundary.csv")).unwrap();
    assert!(poly.starts_with("curve,sigma_b,mu\n") && poly.contains("band,"));
    assert!(tmp.path().join("alpha_sweep.csv").exists());
}

#[test]
fn relax_membership_keeps_boundary_inside() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["relax", "membership"], &configs().join("relax_membership.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = std::fs::read_to_string(tmp.path().join("membership.csv")).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("eps_11,sig_11,class"));
    let classes: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(classes.len(), 12);
    assert!(classes.iter().all(|c| *c != "outside"));
}

#[test]
fn relax_laminate_writes_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["relax", "laminate"], &configs().join("relax_laminate.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("laminate.json"));
    assert!(r["connection_residual"].as_f64().unwrap() < 1e-10);
    let fields = r["fields"].as_array().unwrap();
    assert_eq!(fields.len(), 3);
    assert!(fields.iter().all(|f| f["jump_residual"].as_f64().unwrap() < 1e-10));
    assert!(tmp.path().join("laminate_h8.csv").exists());
}

#[test]
fn relax_envelope_vanishes_at_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["relax", "envelope"], &configs().join("relax_envelope.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("envelope.json"));
    assert_eq!(r["envelope_at_zero"].as_f64(), Some(0.0));
    assert_eq!(r["witness_valid"], true);
    let csv = std::fs::read_to_string(tmp.path().join("envelope.csv")).unwrap();
    assert_eq!(csv.lines().count(), 122);
}

#[test]
fn threads_flag_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(&["solve", "--threads", "2"], &configs().join("rect_linear.json"), tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(run_config(&["solve", "--threads", "0"], &configs().join("rect_linear.json"), tmp.path()).status.code(), Some(1));
}
