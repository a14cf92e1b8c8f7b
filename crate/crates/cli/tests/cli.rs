use std::path::PathBuf;
use std::process::Command;

use finsler_cli::output::TensorJson;

fn finsler(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_finsler")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn metric_file(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "metrics", name].iter().collect();
    path.to_str().unwrap().to_string()
}

fn components(json: &str) -> Vec<f64> {
    fn flatten(v: &serde_json::Value, out: &mut Vec<f64>) {
        match v {
            serde_json::Value::Array(items) => items.iter().for_each(|i| flatten(i, out)),
            other => out.push(other.as_f64().unwrap()),
        }
    }
    let doc: TensorJson = serde_json::from_str(json).unwrap();
    let mut out = Vec::new();
    flatten(&doc.components, &mut out);
    out
}

#[test]
fn compute_euclidean_metric_is_identity() {
    let (code, out, err) = finsler(&["compute", "--metric", "builtin:euclidean2", "--point", "0,0;1,0", "--object", "g", "--format", "json"]);
    assert_eq!(code, 0);
    assert!(err.is_empty());
    let doc: TensorJson = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.object, "g");
    assert_eq!(doc.connection, None);
    assert_eq!(doc.components, serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
}

#[test]
fn compute_json_round_trips() {
    let (code, out, _) = finsler(&[
        "compute", "--metric", "builtin:randers-x", "--point", "0.3,-0.6;0.9,0.7", "--object", "curvature_hv",
        "--connection", "chern", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let doc: TensorJson = serde_json::from_str(&out).unwrap();
    assert_eq!(doc.connection.as_deref(), Some("chern"));
    assert_eq!(doc.to_json(), out);
}

#[test]
fn hashiguchi_f_vanishes_on_minkowski_randers() {
    let (code, out, _) = finsler(&[
        "compute", "--metric", "builtin:minkowski-randers", "--point", "0.2,-0.1;1,0.4", "--object", "F",
        "--connection", "hashiguchi", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let c = components(&out);
    assert_eq!(c.len(), 8);
    assert!(c.iter().all(|v| v.abs() < 1e-14));
}

#[test]
fn chern_v_curvature_is_zero() {
    for metric in ["builtin:randers-x", "builtin:randers-x3"] {
        let point = if metric.ends_with('3') { "0.1,0.2,0.3;1,0.5,-0.4" } else { "0.1,0.2;1,0.5" };
        let (code, out, _) = finsler(&[
            "compute", "--metric", metric, "--point", point, "--object", "curvature_v", "--connection", "chern",
            "--format", "json",
        ]);
        assert_eq!(code, 0);
        assert!(components(&out).iter().all(|v| *v == 0.0));
    }
}

#[test]
fn compute_from_spec_file() {
    let (code, out, _) = finsler(&["compute", "--metric", &metric_file("quartic.toml"), "--point", "0.4,0;1,1", "--object", "L"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("L at x = (0.4, 0), y = (1, 1)"));
}

#[test]
fn exit_codes() {
    // Parse error in the expression.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "dim = 2\nfamily = \"expression\"\nl = \"sqrt(z1)\"\n").unwrap();
    let (code, out, err) = finsler(&["compute", "--metric", bad.to_str().unwrap(), "--point", "0,0;1,0", "--object", "g"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("unknown identifier `z1` at offset 5"), "{err}");

    // Unknown flag value.
    let (code, _, _) = finsler(&["compute", "--metric", "builtin:sphere", "--point", "1,0;1,0", "--object", "torsion"]);
    assert_eq!(code, 2);

    // Randers convexity fails: domain error reports the point.
    let wide = dir.path().join("wide.toml");
    std::fs::write(&wide, "dim = 2\nfamily = \"randers\"\na = [[\"1\", \"0\"], [\"1\"]]\nb = [\"x1\", \"0\"]\n").unwrap();
    let (code, _, err) = finsler(&["compute", "--metric", wide.to_str().unwrap(), "--point", "1.5,0;1,0", "--object", "g"]);
    assert_eq!(code, 3);
    assert!(err.contains("1.5"), "{err}");

    // Non-homogeneous L is refused at the evaluation point.
    let (code, _, err) = finsler(&["compute", "--metric", &metric_file("square.toml"), "--point", "0,0;1,0.5", "--object", "g"]);
    assert_eq!(code, 3);
    assert!(err.contains("homogeneous"));

    // Verify fails with exit 1 on the same metric.
    let (code, out, err) = finsler(&["verify", "--metric", &metric_file("square.toml"), "--samples", "5"]);
    assert_eq!(code, 1);
    assert!(err.is_empty());
    assert!(out.contains("verdict FAIL"));
}

#[test]
fn verify_euclidean_passes() {
    let (code, out, err) = finsler(&["verify", "--metric", "builtin:euclidean2", "--samples", "50", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(err.is_empty());
    assert!(out.ends_with("verdict PASS\n"));
}

#[test]
fn verify_constant_randers_notes_cartan_tensor() {
    let (code, out, _) = finsler(&["verify", "--metric", "builtin:minkowski-randers", "--samples", "10", "--format", "json"]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["passed"], true);
    assert!(doc["observations"]["max_cartan_tensor"].as_f64().unwrap() > 1e-3);
    assert_eq!(doc["observations"]["max_hv_torsion"].as_f64().unwrap(), 0.0);
}

#[test]
fn tighter_tolerances_can_fail() {
    let (code, out, _) = finsler(&["verify", "--metric", "builtin:randers-x", "--samples", "5", "--tol-derived", "1e-30"]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL"));
}

fn table_rows(args: &[&str]) -> serde_json::Value {
    let mut all = vec!["table"];
    all.extend_from_slice(args);
    all.extend(["--format", "json"]);
    let (code, out, _) = finsler(&all);
    assert_eq!(code, 0);
    serde_json::from_str(&out).unwrap()
}

fn row(table: &serde_json::Value, name: &str) -> Vec<f64> {
    table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["row"] == name)
        .unwrap()["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

#[test]
fn table_euclidean_is_zero() {
    let t = table_rows(&["--metric", "builtin:euclidean2", "--point", "0.5,0.5;1,0"]);
    for r in t["rows"].as_array().unwrap() {
        assert!(r["values"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() < 1e-12), "{r}");
    }
}

#[test]
fn table_sphere_columns_coincide() {
    let t = table_rows(&["--metric", "builtin:sphere", "--point", "0.8,0.2;0.5,1"]);
    for r in t["rows"].as_array().unwrap() {
        let v: Vec<f64> = r["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-12), "{r}");
    }
    assert!(row(&t, "R^i_hjk")[0] > 0.1);
}

#[test]
fn table_randers_shares_f_in_pairs() {
    let t = table_rows(&["--metric", "builtin:randers-x", "--point", "0.3,-0.6;0.9,0.7"]);
    let f = row(&t, "F^h_ij - Γ^h_ij");
    assert_eq!(f[0], 0.0);
    assert_eq!(f[1], 0.0);
    assert!(f[2] > 1e-3 && f[2] == f[3]);
    let c = row(&t, "C^h_ij");
    assert!(c[0] > 1e-3 && c[0] == c[2]);
    assert_eq!((c[1], c[3]), (0.0, 0.0));
}

fn compare_error(args: &[&str]) -> f64 {
    let mut all = vec!["compare"];
    all.extend_from_slice(args);
    all.extend(["--format", "json"]);
    let (code, out, _) = finsler(&all);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    doc["relative_error"].as_f64().unwrap()
}

#[test]
fn compare_examples() {
    // Exact up to rounding in the differenced square root.
    assert!(compare_error(&["--metric", "builtin:euclidean2", "--point", "0,0;1,0", "--object", "g"]) < 1e-10);
    let pi4 = std::f64::consts::FRAC_PI_4.to_string();
    let point = format!("{pi4},0;0.3,1");
    assert!(compare_error(&["--metric", "builtin:sphere", "--point", &point, "--object", "gamma"]) < 1e-6);
    let (code, out, _) = finsler(&[
        "compare", "--metric", "builtin:minkowski-randers", "--point", "0,0;1,0.2", "--object", "barthel", "--format", "json",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    for e in doc["entries"].as_array().unwrap() {
        assert_eq!(e["jet"].as_f64().unwrap(), 0.0);
        assert!(e["finite_difference"].as_f64().unwrap().abs() < 1e-12);
    }
    assert!(compare_error(&["--metric", "builtin:randers-x", "--point", "0.3,-0.6;0.9,0.7", "--object", "F", "--connection", "berwald"]) < 1e-5);
}

#[test]
fn compare_rejects_other_objects() {
    let (code, _, err) = finsler(&["compare", "--metric", "builtin:sphere", "--point", "1,0;1,0", "--object", "curvature_h"]);
    assert_eq!(code, 2);
    assert!(err.contains("compare supports"));
}
