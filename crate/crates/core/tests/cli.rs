//! End-to-end runs of the `decaylab` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn model(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "models", &format!("{name}.json")].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decaylab")).args(args).env_remove("DECAYLAB_TOL").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("decaylab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn describe_round_trips_every_shipped_model() {
    for name in ["flat", "lorentzian", "halfline_case1", "halfline_case2", "halfline_case2_bound"] {
        let out = run(&["describe", "--model", &model(name)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let mut v = json(&out);
        assert_eq!(v["diagnostics"].as_array().unwrap().len(), 0);
        v.as_object_mut().unwrap().remove("diagnostics");
        let path = scratch(&format!("{name}.json"));
        std::fs::write(&path, v.to_string()).unwrap();
        let again = run(&["describe", "--model", path.to_str().unwrap()]);
        let mut w = json(&again);
        w.as_object_mut().unwrap().remove("diagnostics");
        assert_eq!(v, w);
    }
}

#[test]
fn describe_flags_an_invalid_model() {
    let path = scratch("negative.json");
    std::fs::write(
        &path,
        r#"{"alpha":1.0,"profile":{"kind":"rational_full_line","strength":0.1,"num":[-1.0],"den":[1.0,0.0,1.0],"support":"full_line"}}"#,
    )
    .unwrap();
    let out = run(&["describe", "--model", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!json(&out)["diagnostics"].as_array().unwrap().is_empty());
    assert_eq!(run(&["survival", "--model", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn survival_csv_is_deterministic_and_well_formed() {
    let args = ["survival", "--model", &model("lorentzian"), "--method", "quad", "--grid", "linear:0,5,11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re_a,im_a,w"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert!((r[1] * r[1] + r[2] * r[2] - r[3]).abs() < 1e-12);
    }
}

#[test]
fn survival_methods_agree_on_the_lorentzian() {
    let grid = "linear:0,10,21";
    let a = stdout(&run(&["survival", "--model", &model("lorentzian"), "--method", "quad", "--grid", grid]));
    let b = stdout(&run(&["survival", "--model", &model("lorentzian"), "--method", "poles", "--grid", grid]));
    for (x, y) in a.lines().zip(b.lines()).skip(1) {
        let w = |s: &str| s.rsplit(',').next().unwrap().parse::<f64>().unwrap();
        assert!((w(x) - w(y)).abs() < 1e-6);
    }
}

#[test]
fn json_output_to_file() {
    let path = scratch("series.json");
    let out = run(&["survival", "--model", &model("flat"), "--method", "closed", "--grid", "log:0.1,10,5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["times"].as_array().unwrap().len(), 5);
    assert_eq!(v["method"], "flat_closed");
}

#[test]
fn poles_and_bound_reports() {
    let v = json(&run(&["poles", "--model", &model("lorentzian")]));
    assert_eq!(v["poles"].as_array().unwrap().len(), 2);
    assert!(v["bound"].is_null());

    let v = json(&run(&["bound", "--model", &model("halfline_case2_bound")]));
    assert!(v["bound"]["lambda0"].as_f64().unwrap() < 0.0);
    let w = v["bound"]["weight"].as_f64().unwrap();
    assert!(w > 0.0 && w < 1.0);

    let v = json(&run(&["bound", "--model", &model("halfline_case2")]));
    assert!(v["bound"].is_null());
}

#[test]
fn closed_form_needs_the_flat_model() {
    let out = run(&["survival", "--model", &model("lorentzian"), "--method", "closed"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_compare_reports_agreement_and_writes_eigs() {
    let eigs = scratch("eigs.csv");
    let out = run(&["oracle-compare", "--model", &model("lorentzian"), "--emax", "40", "--eigs", eigs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-3);
    let text = std::fs::read_to_string(&eigs).unwrap();
    assert!(text.starts_with("k,lambda_k,weight_k\n"));
    assert_eq!(text.lines().count(), 2002);
}

#[test]
fn tail_fit_reports_power_law() {
    let v = json(&run(&["tail-fit", "--model", &model("halfline_case2"), "--window", "100,10000"]));
    let slope = v["slope"].as_f64().unwrap();
    assert!(slope <= -1.0 && slope > -2.2);
    assert_eq!(v["exponential_rejected"], true);
}

#[test]
fn theorems_pass_on_the_lorentzian() {
    let out = run(&["theorems", "--model", &model("lorentzian")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn spectrum_csv() {
    let text = stdout(&run(&["spectrum", "--model", &model("halfline_case1"), "--grid", "linear:0.1,2,20", "--format", "csv"]));
    assert!(text.starts_with("lambda,weight\n"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(64));
    assert_eq!(run(&["survival", "--model", &model("flat"), "--grid", "linear:1,0,5"]).status.code(), Some(64));
    assert_eq!(run(&["survival", "--model", &model("flat"), "--tol", "sloppy"]).status.code(), Some(64));
    assert_eq!(run(&["survival", "--model", "/does/not/exist.json"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn tolerance_profile_from_flag_and_env() {
    let fast = run(&["survival", "--model", &model("flat"), "--tol", "fast", "--grid", "linear:0,5,6"]);
    assert_eq!(fast.status.code(), Some(0));
    let env = Command::new(env!("CARGO_BIN_EXE_decaylab"))
        .args(["survival", "--model", &model("flat"), "--grid", "linear:0,5,6"])
        .env("DECAYLAB_TOL", "strict")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
}
