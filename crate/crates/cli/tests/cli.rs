use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{Map, Value};

fn sasaki(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasaki"))
        .args(args)
        .env_remove("SASAKI_THREADS")
        .output()
        .expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let out = sasaki(&all);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Replaces every leaf by its type name and keeps one element per array.
fn skeleton(v: &Value) -> Value {
    match v {
        Value::Null => Value::from("null"),
        Value::Bool(_) => Value::from("bool"),
        Value::Number(_) => Value::from("number"),
        Value::String(_) => Value::from("string"),
        Value::Array(items) => Value::Array(items.first().map(skeleton).into_iter().collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), skeleton(v))).collect::<Map<_, _>>()),
    }
}

/// Golden schemas live in `tests/golden`; set `SASAKI_UPDATE_GOLDEN=1`
/// to regenerate them.
fn check_schema(name: &str, args: &[&str]) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    let got = skeleton(&json_of(args));
    if std::env::var_os("SASAKI_UPDATE_GOLDEN").is_some() {
        fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
        return;
    }
    let want: Value = serde_json::from_str(&fs::read_to_string(&path).expect("golden file")).unwrap();
    assert_eq!(got, want, "schema drift for {name}");
}

#[test]
fn json_schemas_are_pinned() {
    check_schema("structure-check", &["structure-check", "--n", "1", "--weights", "1,2", "--points", "5"]);
    check_schema("curvature", &["curvature", "--weights", "1,2", "--points", "2"]);
    check_schema("volume", &["volume", "--n", "2", "--weights", "1,1,1"]);
    check_schema("futaki", &["futaki", "--n", "1", "--weights", "1,2", "--b", "1,0", "--method", "all"]);
    check_schema("classify", &["classify", "--n", "1", "--weights", "1,1"]);
    check_schema("flow", &["flow", "--weights", "1,2"]);
    check_schema("verify", &["verify", "--suite", "identities"]);
}

#[test]
fn documented_examples() {
    let c = json_of(&["classify", "--n", "1", "--weights", "1,1"]);
    assert_eq!(c["csc"], Value::Bool(true));
    assert_eq!(c["einstein"], Value::Bool(true));
    assert_eq!(c["A"], serde_json::json!([0.0, 0.0]));

    let f = json_of(&["futaki", "--n", "1", "--weights", "1,2", "--b", "1,0", "--method", "all"]);
    let target = -2.0 * std::f64::consts::PI.powi(2);
    for m in ["closed", "chart", "sphere"] {
        let v = f["values"][m].as_f64().unwrap();
        assert!((v - target).abs() < 1e-6 * target.abs(), "{m} {v}");
    }

    let v = json_of(&["volume", "--n", "2", "--weights", "1,1,1"]);
    let pi3 = std::f64::consts::PI.powi(3);
    assert!((v["closed"].as_f64().unwrap() - pi3).abs() < 1e-13 * pi3);
    assert!(v["relative_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn identical_invocations_give_identical_bytes() {
    for args in [
        vec!["structure-check", "--n", "2", "--weights", "1,1.5,2", "--seed", "7", "--output", "json"],
        vec!["futaki", "--weights", "1,2", "--b", "0,1", "--mc-samples", "20000", "--seed", "3", "--output", "json"],
        vec!["flow", "--weights", "1,2", "--output", "json"],
        vec!["verify", "--suite", "futaki", "--output", "json"],
    ] {
        let a = sasaki(&args);
        let b = sasaki(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    // Thread count does not change the bits.
    let one = sasaki(&["volume", "--weights", "1,3", "--threads", "1", "--output", "json"]);
    let four = sasaki(&["volume", "--weights", "1,3", "--threads", "4", "--output", "json"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn argument_errors_exit_with_two_and_name_the_flag() {
    let cases: [(&[&str], &str); 6] = [
        (&["volume", "--weights", "1,0"], "--weights"),
        (&["volume", "--n", "2", "--weights", "1,2"], "--weights"),
        (&["volume", "--weights", "1,x"], "--weights"),
        (&["futaki", "--weights", "1,2", "--b", "1,2,3"], "--b"),
        (&["volume", "--fd-step", "1"], "--fd-step"),
        (&["flow", "--n", "2"], "--n"),
    ];
    for (args, flag) in cases {
        let out = sasaki(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(flag), "{args:?}");
    }
    assert_eq!(sasaki(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(sasaki(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_mirrors_flags_and_yields_to_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# weights for S^5\nn = 2\nweights = 1,1,1\nquad_order = 32\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = json_of(&["volume", "--config", cfg]);
    assert_eq!(from_file["n"], 2);
    let overridden = json_of(&["volume", "--config", cfg, "--n", "1", "--weights", "1,2"]);
    assert_eq!(overridden["weights"], serde_json::json!([1.0, 2.0]));
}

#[test]
fn flow_writes_report_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.json");
    let csv = dir.path().join("profile.csv");
    let status = sasaki(&[
        "flow", "--weights", "1,2", "--perturb", "0.05", "--basis-size", "8", "--tol", "1e-4", "--max-iter", "500",
        "--out", out.to_str().unwrap(), "--profile-csv", csv.to_str().unwrap(), "--csv-rows", "11",
    ]);
    assert_eq!(status.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], Value::Bool(true));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma,phi,s_deformed,s_closed_baseline"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 4);
    // 17 significant digits: one leading digit and 16 decimals.
    let mantissa = row[2].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.len(), 18, "{}", row[2]);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn non_convergence_exits_with_one() {
    let out = sasaki(&["flow", "--weights", "1,2", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(1));
}
