use std::path::{Path, PathBuf};

use pathshap::cli::run_cli;
use tempfile::TempDir;

const STUMP: &str = r#"{"num_features": 1, "num_groups": 1, "base_score": 0.0, "trees": [{"group": 0, "nodes": [
  {"id": 0, "feature": 0, "threshold": 0.5, "left": 1, "right": 2, "cover": 10.0},
  {"id": 1, "leaf_value": 1.0, "cover": 4.0},
  {"id": 2, "leaf_value": 0.0, "cover": 6.0}]}]}"#;

const DEPTH2: &str = r#"{"num_features": 2, "num_groups": 1, "base_score": 0.0, "trees": [{"group": 0, "nodes": [
  {"id": 0, "feature": 0, "threshold": 0.5, "left": 1, "right": 2, "cover": 10.0},
  {"id": 1, "feature": 1, "threshold": 0.5, "left": 3, "right": 4, "cover": 4.0},
  {"id": 2, "leaf_value": 0.0, "cover": 6.0},
  {"id": 3, "leaf_value": 1.0, "cover": 1.0},
  {"id": 4, "leaf_value": 2.0, "cover": 3.0}]}]}"#;

const SINGLE_LEAF: &str = r#"{"num_features": 1, "num_groups": 1, "base_score": 0.0, "trees": [{"group": 0, "nodes": [
  {"id": 0, "leaf_value": 0.7, "cover": 10.0}]}]}"#;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli(std::iter::once("pathshap").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stump_shap_line() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", STUMP);
    let data = file(&dir, "d.csv", "0.2\n");
    let out = dir.path().join("out.csv");
    let r = cli(&["shap", "--model", s(&model), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "f0,bias\n0.6,0.4\n");
}

#[test]
fn reference_backend_matches_engine() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", DEPTH2);
    let data = file(&dir, "d.csv", "x,y\n0.2,0.7\n0.2,0.1\n0.9,0.9\n");
    for command in ["shap", "interactions"] {
        let base = ["--model", s(&model), "--data", s(&data), "--header"];
        let engine = cli(&[&[command][..], &base].concat());
        let reference = cli(&[&[command][..], &base, &["--backend", "reference"]].concat());
        assert_eq!(engine.code, 0);
        assert_eq!(reference.code, 0);
        // Same layout; values agree to rounding, the two backends sum in different orders.
        let cells = |text: &str| -> Vec<Vec<String>> {
            text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
        };
        let (a, b) = (cells(&engine.stdout), cells(&reference.stdout));
        assert_eq!(a[0], b[0]);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()).filter(|(x, _)| x.parse::<f64>().is_ok()) {
            let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
            assert!((x - y).abs() <= 1e-12, "{command}: {x} vs {y}");
        }
    }
}

#[test]
fn depth2_interaction_rows() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", DEPTH2);
    let data = file(&dir, "d.csv", "0.2,0.7\n");
    let r = cli(&["interactions", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rows: Vec<Vec<f64>> =
        r.stdout.lines().skip(1).map(|l| l.split(',').skip(3).map(|c| c.parse().unwrap()).collect()).collect();
    let expected = [[1.05, 0.075, 0.0], [0.075, 0.1, 0.0], [0.0, 0.0, 0.7]];
    for (got, want) in rows.iter().zip(expected) {
        assert!(got.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12), "{got:?}");
    }
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(rows[i][j], rows[j][i]);
        }
    }
}

#[test]
fn stump_interactions_file() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", STUMP);
    let data = file(&dir, "d.csv", "0.2\n");
    let r = cli(&["interactions", "--model", s(&model), "--data", s(&data)]);
    assert_eq!(r.stdout, "row,group,feature,f0,bias\n0,0,0,0.6,0\n0,0,1,0,0.4\n");
}

#[test]
fn missing_model_is_input_error_without_output() {
    let dir = TempDir::new().unwrap();
    let data = file(&dir, "d.csv", "0.2\n");
    let out = dir.path().join("out.csv");
    let missing = dir.path().join("missing.json");
    let r = cli(&["shap", "--model", s(&missing), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("model"));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", STUMP);
    let good = file(&dir, "good.csv", "0.2\n");
    let run = |model: &Path, data: &Path| cli(&["shap", "--model", s(model), "--data", s(data)]).code;

    assert_eq!(run(&file(&dir, "bad.json", "{not json"), &good), 2);
    assert_eq!(run(&model, &file(&dir, "text.csv", "abc\n")), 2);
    assert_eq!(run(&model, &file(&dir, "ragged.csv", "0.1\n0.2,0.3\n")), 2);
    assert_eq!(run(&model, &file(&dir, "nan.csv", "NaN\n")), 3);
    assert_eq!(run(&model, &file(&dir, "wide.csv", "0.1,0.2\n")), 3);
    let cyclic = STUMP.replace(r#""left": 1"#, r#""left": 0"#);
    assert_eq!(run(&file(&dir, "cyclic.json", &cyclic), &good), 3);
    let cover = STUMP.replace(r#""cover": 6.0"#, r#""cover": 7.0"#);
    assert_eq!(run(&file(&dir, "cover.json", &cover), &good), 3);

    assert_eq!(cli(&["shap", "--model", s(&model)]).code, 2);
    assert_eq!(cli(&["shap", "--model", s(&model), "--data", s(&good), "--workers", "0"]).code, 2);
    assert_eq!(cli(&["shap", "--model", s(&model), "--data", s(&good), "--model-format", "xgboost-dump"]).code, 2);
    assert_eq!(cli(&["--help"]).code, 0);
}

#[test]
fn stats_json() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", STUMP);
    let data = file(&dir, "d.csv", "0.2\n0.9\n");
    let r = cli(&["shap", "--model", s(&model), "--data", s(&data), "--stats"]);
    let stats: serde_json::Value = serde_json::from_str(r.stderr.trim()).unwrap();
    for key in ["extend_steps", "conditioned_evals", "bins", "utilisation", "wall_time_seconds"] {
        assert!(stats.get(key).is_some(), "{key}");
    }
    assert_eq!(stats["bins"], 1);
}

#[test]
fn xgboost_dump_input() {
    let dir = TempDir::new().unwrap();
    let dump = r#"[{"nodeid": 0, "split": "f0", "split_condition": 0.5, "yes": 1, "no": 2, "missing": 1, "cover": 10,
        "children": [{"nodeid": 1, "leaf": 1.0, "cover": 4}, {"nodeid": 2, "leaf": 0.0, "cover": 6}]}]"#;
    let model = file(&dir, "dump.json", dump);
    let data = file(&dir, "d.csv", "0.2,5\n");
    let r = cli(&[
        "shap",
        "--model",
        s(&model),
        "--model-format",
        "xgboost-dump",
        "--num-class",
        "1",
        "--data",
        s(&data),
        "--base-score",
        "0.5",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout, "f0,f1,bias\n0.6,0,0.9\n");
}

#[test]
fn pack_stats_outputs() {
    let r = cli(&["pack-stats", "--synthetic-trees", "10", "--synthetic-depth", "3"]);
    assert_eq!(r.code, 0);
    let lines: Vec<Vec<String>> = r.stdout.lines().map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(lines[0], ["algorithm", "time_seconds", "utilisation", "bins"]);
    let summary: Vec<(&str, &str, &str)> = lines[1..].iter().map(|l| (&*l[0], &*l[2], &*l[3])).collect();
    assert_eq!(
        summary,
        [("none", "0.125000", "80"), ("nf", "1.000000", "10"), ("ffd", "1.000000", "10"), ("bfd", "1.000000", "10")]
    );

    let dir = TempDir::new().unwrap();
    let model = file(&dir, "leaf.json", SINGLE_LEAF);
    let r = cli(&["pack-stats", "--model", s(&model)]);
    for line in r.stdout.lines().skip(1) {
        assert!(line.ends_with(",0.031250,1"), "{line}");
    }
    assert_eq!(cli(&["pack-stats"]).code, 2);
}

#[test]
fn selftest_command() {
    let first = cli(&["selftest", "--seed", "5", "--cases", "10"]);
    assert_eq!(first.code, 0, "{}", first.stdout);
    assert_eq!(first.stdout, cli(&["selftest", "--seed", "5", "--cases", "10"]).stdout);
    assert_ne!(cli(&["selftest", "--cases", "3", "--inject-perturbation", "1e-6"]).code, 0);
}

#[test]
fn bench_reports_rate() {
    let r = cli(&["bench", "--trees", "5", "--depth", "4", "--rows", "20"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("rows,seconds,rows_per_second"));
}

#[test]
fn stump_reference_file_identical() {
    let dir = TempDir::new().unwrap();
    let model = file(&dir, "m.json", STUMP);
    let data = file(&dir, "d.csv", "0.2\n0.9\n");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    cli(&["shap", "--model", s(&model), "--data", s(&data), "--out", s(&a)]);
    cli(&["shap", "--model", s(&model), "--data", s(&data), "--out", s(&b), "--backend", "reference"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
