use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qhyper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhyper"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).expect("valid JSON on stdout")
}

fn write_matrix(dir: &Path, name: &str, diag: &[f64]) -> String {
    let n = diag.len();
    let entries: Vec<[f64; 4]> = (0..n * n)
        .map(|k| if k / n == k % n { [diag[k / n], 0.0, 0.0, 0.0] } else { [0.0; 4] })
        .collect();
    let body = serde_json::json!({ "rows": n, "cols": n, "entries": entries });
    let path = dir.join(name);
    std::fs::write(&path, body.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn constants_report() {
    let out = qhyper(&["constants", "--n", "2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,tau,omega,lambda_n,margin,margin_tight,verdict"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let omega: f64 = row[2].parse().unwrap();
    assert!((0.3854..0.3855).contains(&omega));
    assert_eq!(row[6], "true");

    let v = json(&qhyper(&["constants", "--n", "2", "--format", "json"]));
    for key in ["tau", "omega", "lambda_n", "margin", "verdict"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], Value::Bool(true));
}

#[test]
fn constants_rejects_small_n() {
    assert_eq!(code(&qhyper(&["constants", "--n", "1"])), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&qhyper(&["verify", "--suite", "nonsense"])), 2);
    assert_eq!(code(&qhyper(&["verify", "--samples", "0"])), 2);
    assert_eq!(code(&qhyper(&["verify", "--tolerance", "unknown=1"])), 2);
    assert_eq!(code(&qhyper(&["verify", "--Q", "1", "--suite", "dirichlet"])), 2);
    assert_eq!(code(&qhyper(&["frobnicate"])), 2);
    assert_eq!(code(&qhyper(&["--help"])), 0);
}

#[test]
fn verify_is_byte_identical_for_equal_configs() {
    let args = ["verify", "--suite", "distance", "--samples", "40", "--seed", "11"];
    let (a, b) = (qhyper(&args), qhyper(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let other = qhyper(&["verify", "--suite", "distance", "--samples", "40", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn commutator_sweep_has_no_violation() {
    let out = qhyper(&["verify", "--suite", "commutator", "--samples", "1000", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let check = &v["checks"][0];
    assert_eq!(check["check"], "commutator");
    assert_eq!(check["violations"], 0);
    assert!(check["worst_slack"].as_f64().unwrap() >= -1e-8);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn provable_suites_pass() {
    for suite in ["commutator", "zassenhaus", "dirichlet", "distance", "volume"] {
        let out = qhyper(&["verify", "--suite", suite, "--samples", "100", "--seed", "7", "--n", "2"]);
        assert_eq!(code(&out), 0, "{suite}: {}", stdout(&out));
    }
}

#[test]
fn truncated_rounding_is_detected() {
    let out = qhyper(&["verify", "--suite", "dirichlet", "--samples", "50", "--inject-truncated-rounding"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn full_turn_reading_passes_every_suite() {
    let out = qhyper(&[
        "verify", "--suite", "all", "--samples", "100", "--seed", "7", "--n", "2", "--angle-scaling", "full-turn",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn half_turn_reading_reports_rotation_violations() {
    let out = qhyper(&["verify", "--suite", "all", "--samples", "100", "--seed", "7", "--n", "2", "--format", "json"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    let failing: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["violations"].as_u64().unwrap() > 0)
        .map(|c| c["check"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["rotation_bound", "resume", "omega"]);
}

#[test]
fn certify_small_dilation() {
    let dir = TempDir::new().unwrap();
    let r = 0.01f64.exp();
    let path = write_matrix(dir.path(), "dilation.json", &[r, 1.0, 1.0 / r]);
    let out = qhyper(&["certify", &path, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["outcome"], "certified");
    assert_eq!(v["verdict"], Value::Bool(true));
    assert!(v["product"].as_f64().unwrap() < v["omega"].as_f64().unwrap());
    assert!((v["delta"].as_f64().unwrap() - 0.02).abs() < 1e-12);
}

#[test]
fn certify_identity_fixes_origin() {
    let dir = TempDir::new().unwrap();
    let path = write_matrix(dir.path(), "id.json", &[1.0, 1.0, 1.0]);
    let out = qhyper(&["certify", &path, "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["outcome"], "fixes_origin");
}

#[test]
fn certify_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let gl = write_matrix(dir.path(), "gl.json", &[2.0, 3.0, 5.0]);
    assert_eq!(code(&qhyper(&["certify", &gl])), 3);
    let malformed = dir.path().join("bad.json");
    std::fs::write(&malformed, r#"{"rows":3,"cols":3,"entries":[[1,0,0,0]]}"#).unwrap();
    assert_eq!(code(&qhyper(&["certify", malformed.to_str().unwrap()])), 2);
    std::fs::write(&malformed, "not json").unwrap();
    assert_eq!(code(&qhyper(&["certify", malformed.to_str().unwrap()])), 2);
    assert_eq!(code(&qhyper(&["certify", "/nonexistent/matrix.json"])), 2);
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("constants.csv");
    let out = qhyper(&["constants", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,tau,omega"));
}

#[test]
fn volume_table() {
    let out = qhyper(&["volume", "--n", "3", "--radius", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let volume: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(volume > 0.0);
    }

    let zero = qhyper(&["volume", "--n", "2", "--radius", "0", "--format", "json"]);
    let v = json(&zero);
    for row in v.as_array().unwrap() {
        assert_eq!(row["volume"].as_f64(), Some(0.0));
    }

    let v = json(&qhyper(&["volume", "--n", "2", "--radius", "0.5", "--radius", "2", "--format", "json"]));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0]["manifold_volume_printed"].is_null());
    assert!(rows[2]["manifold_ln_volume_recomputed"].as_f64().unwrap().is_finite());
    let reparsed: Value = serde_json::from_str(&v.to_string()).unwrap();
    assert_eq!(reparsed, v);

    assert_eq!(code(&qhyper(&["volume", "--n", "0"])), 2);
    assert_eq!(code(&qhyper(&["volume", "--radius", "-1"])), 2);
}

#[test]
fn distance_examples() {
    let u = 2.0 * std::f64::consts::E.powi(2);
    let b = format!(r#"{{"xi":[[0,0,0,0]],"v":[0,0,0],"u":{u}}}"#);
    let out = qhyper(&["distance", "o", &b, "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert!((json(&out)["rho"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let p = "[[-1,0,0,0],[0.3,0,0.2,0],[1,0,0,0]]";
    let out = qhyper(&["distance", p, p]);
    assert_eq!(stdout(&out).lines().nth(1), Some("0"));

    assert_eq!(code(&qhyper(&["distance", "o", "[[1,0,0,0],[0,0,0,0],[0,0,0,0]]"])), 3);
    assert_eq!(code(&qhyper(&["distance", "o", r#"{"xi":[[0,0,0,0]],"v":[0,0,0],"u":-1}"#])), 3);
    assert_eq!(code(&qhyper(&["distance", "[[-1,0,0,0],[1,0,0,0]]", "[[-1,0,0,0],[0,0,0,0],[1,0,0,0]]"])), 2);
    assert_eq!(code(&qhyper(&["distance", "o", "{not json"])), 2);
}

#[test]
fn distance_reads_point_files() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(&path, r#"{"xi":[[0,0,0,0]],"v":[0,0,0],"u":8}"#).unwrap();
    let out = qhyper(&["distance", "o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let rho: f64 = stdout(&out).lines().nth(1).unwrap().parse().unwrap();
    assert!((rho - 2.0 * 2f64.ln()).abs() < 1e-12);
}
