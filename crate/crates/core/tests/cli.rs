use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isgraph")).args(args).output().expect("binary runs")
}

fn run_with_config(sub: &str, dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{sub}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(sub);
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    isgraph(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn degree_dist_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("degree-dist", dir.path(), r#"{"mode": "none", "lambda_l": 1, "lambda_e": 1}"#, &["--trials", "100000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("degree-dist");
    let (header, rows) = csv_rows(&out.join("pmf.csv"));
    assert_eq!(header, ["n", "empirical", "analytic", "abs_diff"]);
    assert_eq!(rows[0][2], 0.5);
    assert!((rows[0][1] - 0.5).abs() < 0.01);
    let report = json(&out.join("report.json"));
    assert_eq!(report["estimate"]["trials"], 100000);
    assert_eq!(report["config"]["lambda_l"], 1.0);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "degree-dist");
    assert_eq!(manifest["config"]["trials"], 100000);
    assert_eq!(manifest["outputs"], serde_json::json!(["pmf.csv", "report.json"]));
}

#[test]
fn degree_dist_sectorized() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("degree-dist", dir.path(), r#"{"mode": "sectorized", "sectors": 1}"#, &["--trials", "2000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("degree-dist/pmf.csv"));
    for (n, row) in rows.iter().enumerate() {
        assert_eq!(row[0], n as f64);
        assert!((row[2] - 0.5f64.powi(n as i32 + 1)).abs() < 1e-15);
    }

    let o = run_with_config("degree-dist", dir.path(), r#"{"mode": "sectorized", "sectors": 2}"#, &["--trials", "2000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("degree-dist/pmf.csv"));
    assert_eq!(rows[0][2], 0.25);
}

#[test]
fn config_errors_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("degree-dist", dir.path(), "{\n  \"mode\": \"none\",\n  \"lamda_l\": 1\n}", &[]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("unknown field `lamda_l`") && err.contains("line 3"), "{err}");

    let o = run_with_config("fig4", dir.path(), "{\n  \"trials\": 10,\n}", &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = run_with_config("degree-dist", dir.path(), r#"{"lambda_e": -1}"#, &[]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));

    let o = isgraph(&["degree-dist", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&o), 1);
    let o = isgraph(&["degree-dist", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&isgraph(&["--help"])), 0);
}

#[test]
fn fig4_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"lambda_e": [0.5, 1.0], "rho": [0.0, 0.5, 1.0], "trials": 20000, "seed": 4}"#;
    let o = run_with_config("fig4", dir.path(), cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("fig4");
    let (header, rows) = csv_rows(&out.join("fig4.csv"));
    assert_eq!(header, ["lambda_e", "rho", "mean_sim", "ci_low", "ci_high", "bound_printed", "bound_corrected"]);
    assert_eq!(rows.len(), 6);
    let meta = json(&out.join("fig4.json"));
    assert_eq!(meta["defaulted_axes"], serde_json::json!([]));
    for (row, point) in rows.iter().zip(meta["points"].as_array().unwrap()) {
        let se = point["report"]["stderr"].as_f64().unwrap();
        if row[1] == 0.0 {
            let ratio = 1.0 / row[0];
            assert!(row[3] <= ratio && ratio <= row[4], "{row:?}");
            assert!((row[5] - ratio).abs() < 1e-12 && (row[6] - ratio).abs() < 1e-12);
        }
        assert!(row[6] <= row[2] + 2.0 * se, "{row:?}");
    }
}

#[test]
fn fig4_default_grid_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    let o = isgraph(&["fig4", "--trials", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = csv_rows(&out.join("fig4.csv"));
    assert_eq!(rows.len(), 39);
    assert_eq!(rows[13][0], 0.5);
    assert_eq!(rows[3][1], 0.3);
    assert_eq!(json(&out.join("fig4.json"))["defaulted_axes"], serde_json::json!(["lambda_e", "rho"]));
    assert_eq!(json(&out.join("manifest.json"))["config_path"], Value::Null);
}

#[test]
fn graph_sample_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"window_radius": 3, "lambda_l": 1, "lambda_e": 0, "seed": 9}"#;
    let o = run_with_config("graph-sample", dir.path(), cfg, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("graph-sample");
    let nodes = fs::read_to_string(out.join("nodes.csv")).unwrap();
    let edges = fs::read_to_string(out.join("edges.csv")).unwrap();
    assert!(nodes.starts_with("id,kind,x,y\n0,legit,0.0,0.0\n"));
    let k = nodes.lines().count() - 1;
    assert!(!nodes.contains(",eve,"));
    assert_eq!(edges.lines().count() - 1, k * (k - 1));

    let dense = r#"{"window_radius": 3, "lambda_l": 1, "lambda_e": 20, "seed": 9,
        "enhancement": {"type": "sectorized", "sectors": 3, "offsets": {"law": "uniform"}}}"#;
    let a = run_with_config("graph-sample", dir.path(), dense, &[]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let first = (fs::read(out.join("nodes.csv")).unwrap(), fs::read(out.join("edges.csv")).unwrap());
    let edges = String::from_utf8(first.1.clone()).unwrap().lines().count() - 1;
    let legit = String::from_utf8(first.0.clone()).unwrap().matches(",legit,").count();
    assert!(edges < legit * (legit - 1) / 4, "{edges} edges among {legit} nodes");
    let b = run_with_config("graph-sample", dir.path(), dense, &[]);
    assert_eq!(code(&b), 0);
    assert_eq!(first, (fs::read(out.join("nodes.csv")).unwrap(), fs::read(out.join("edges.csv")).unwrap()));

    let o = run_with_config("graph-sample", dir.path(), cfg, &["--trials", "5"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn validate_selection_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("validate", dir.path(), r#"{"select": ["thm3.1"]}"#, &["--trials", "20000"]);
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert_eq!(code(&o), 0, "{stdout}{}", stderr(&o));
    assert!(stdout.contains("PASS C1 [thm3.1]") && stdout.contains("PASS C2 [thm3.1]"), "{stdout}");
    assert!(!stdout.contains(" C3 "));
    let saved = json(&dir.path().join("validate/validation.json"));
    assert_eq!(saved.as_array().unwrap().len(), 2);

    let o = run_with_config("validate", dir.path(), r#"{"analytic_scale": 1.5}"#, &["--trials", "20000", "--select", "c1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL C1"));

    let o = run_with_config("validate", dir.path(), r#"{"select": ["thm7"]}"#, &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with_config("degree-dist", dir.path(), r#"{"mode": "sectorized", "sectors": 3, "estimator": "windowed"}"#, &["--trials", "3000", "--seed", "77"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = dir.path().join("degree-dist");
    let again = dir.path().join("again");
    let o = isgraph(&["replay", "--manifest", first.join("manifest.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["pmf.csv", "report.json"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
    assert_eq!(json(&again.join("manifest.json"))["seed"], 77);

    let f4 = dir.path().join("f4");
    let o = isgraph(&["fig4", "--trials", "50", "--out", f4.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let f4b = dir.path().join("f4b");
    let o = isgraph(&["replay", "--manifest", f4.join("manifest.json").to_str().unwrap(), "--out", f4b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["fig4.csv", "fig4.json"] {
        assert_eq!(fs::read(f4.join(f)).unwrap(), fs::read(f4b.join(f)).unwrap(), "{f}");
    }
}
