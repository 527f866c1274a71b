use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wdro_cli::config::RunFile;
use wdro_cli::pipelines::{CertificateRecord, TraceEvent};

const ALL_PIPELINES: &str = r#"[
 {"config_id": "cvar", "loss": {"family": "cvar_abs_residual", "beta": [0.5, -0.2], "alpha": 0.3, "r": 1.0,
   "cost": {"variant": "full_norm", "norm": {"kind": "l2"}}},
  "data": {"generator": {"seed": 11, "n": 5, "dim": 2}},
  "delta_grid": [0.0, 0.1, 1.0], "grid_resolution": 4,
  "pipelines": ["bounds", "oracle", "certificate", "cvar", "solve"],
  "solver": {"max_iter": 300}},
 {"config_id": "hinge", "loss": {"family": "hinge_pow", "beta": [1.0, -0.5], "r": 2.0,
   "cost": {"variant": "feature_norm_label_indicator", "norm": {"kind": "l1"}}},
  "data": {"variant": "binary", "atoms": [{"x": [0.2, 0.1], "y": 1}, {"x": [-0.3, 0.4], "y": -1}], "weights": [0.25, 0.75]},
  "delta_grid": [0.5], "pipelines": ["bounds", "oracle", "certificate"]}
]"#;

const ONE_FAILS: &str = r#"[
 {"config_id": "a", "loss": {"family": "abs_linear", "beta": [1.0, -0.5], "r": 1.0,
   "cost": {"variant": "full_norm", "norm": {"kind": "l2"}}},
  "data": {"generator": {"seed": 1, "n": 4, "dim": 2}}, "delta_grid": [0.1, 0.5], "pipelines": ["bounds", "certificate"]},
 {"config_id": "sigmoid", "loss": {"family": "hard_sigmoid", "beta": [2.0], "r": 1.0,
   "cost": {"variant": "plain_norm", "norm": {"kind": "l2"}}},
  "data": {"variant": "plain", "atoms": [[0.0]], "weights": [1.0]}, "delta_grid": [0.4, 1.0], "pipelines": ["bounds", "certificate"]},
 {"config_id": "c", "loss": {"family": "abs_linear", "beta": [2.0], "r": 2.0, "cost": {"variant": "absolute_scalar"}},
  "data": {"generator": {"seed": 2, "n": 3, "dim": 1, "sampler": "gaussian"}}, "delta_grid": [0.3],
  "pipelines": ["bounds", "certificate"]}
]"#;

fn wdro(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wdro"));
    cmd.args(args).env_remove(wdro_cli::THREADS_ENV);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_file(dir: &Path, name: &str, text: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{name}.json"));
    fs::write(&cfg, text).unwrap();
    let out = dir.join(format!("{name}-out"));
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (wdro(&args, &[]), out)
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn all_pipelines_write_five_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = run_file(tmp.path(), "all", ALL_PIPELINES, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_files(&dir), ["bounds.csv", "certificate.csv", "cvar.csv", "oracle.csv", "solve.csv"]);
    let (header, rows) = csv_rows(&dir.join("oracle.csv"));
    assert_eq!(&header[..13], &wdro_cli::report::BOUND_COLUMNS);
    assert_eq!(rows.len(), 4);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in &rows {
        assert_eq!(row[col("error")], "");
        assert_eq!(row[col("runtime_ms")], "");
        let u: f64 = row[col("U")].parse().unwrap();
        let v: f64 = row[col("oracle_value")].parse().unwrap();
        let lower: f64 = row[col("L_lower")].parse().unwrap();
        assert!(lower <= v + 1e-9 && v <= u + 1e-9, "{lower} {v} {u}");
    }
}

#[test]
fn malformed_json_exits_one_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = &ALL_PIPELINES[..ALL_PIPELINES.len() / 2];
    let (out, dir) = run_file(tmp.path(), "broken", broken, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.exists());
}

#[test]
fn invalid_configs_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let unsorted = ONE_FAILS.replace("[0.1, 0.5]", "[0.5, 0.1]");
    let duplicate = ONE_FAILS.replace("\"config_id\": \"c\"", "\"config_id\": \"a\"");
    let unpaired = ONE_FAILS.replace("\"variant\": \"plain_norm\"", "\"variant\": \"full_norm\"");
    for (k, text) in [unsorted, duplicate, unpaired].iter().enumerate() {
        let (out, dir) = run_file(tmp.path(), &format!("bad{k}"), text, &[]);
        assert_eq!(out.status.code(), Some(1), "case {k}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!dir.exists());
    }
}

#[test]
fn per_config_failure_exits_two_and_keeps_other_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = run_file(tmp.path(), "fails", ONE_FAILS, &[]);
    assert_eq!(out.status.code(), Some(2));
    let (header, rows) = csv_rows(&dir.join("certificate.csv"));
    let err = header.iter().position(|h| h == "error").unwrap();
    let achieved = header.iter().position(|h| h == "achieved").unwrap();
    assert_eq!(rows.len(), 5);
    let failed: Vec<_> = rows.iter().filter(|r| !r[err].is_empty()).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0][0], "sigmoid");
    assert!(failed[0][err].contains("no witness found"), "{}", failed[0][err]);
    for r in rows.iter().filter(|r| r[err].is_empty()) {
        assert!(r[achieved].parse::<f64>().is_ok());
    }
}

#[test]
fn missing_config_and_unwritable_output_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let out = wdro(&["run", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));

    let cfg = tmp.path().join("ok.json");
    fs::write(&cfg, ONE_FAILS).unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("sub");
    let out = wdro(&["run", cfg.to_str().unwrap(), "--out", target.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, dir_a) = run_file(tmp.path(), "first", ALL_PIPELINES, &["--threads", "1", "--trace"]);
    let cfg = tmp.path().join("first.json");
    let dir_b = tmp.path().join("second-out");
    let b = wdro(&["run", cfg.to_str().unwrap(), "--out", dir_b.to_str().unwrap(), "--trace"], &[("WDRO_THREADS", "4")]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for name in ["bounds.csv", "oracle.csv", "certificate.csv", "cvar.csv", "solve.csv", "trace.jsonl", "certificates.jsonl"] {
        assert_eq!(fs::read(dir_a.join(name)).unwrap(), fs::read(dir_b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn timing_fills_runtime_column() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = run_file(tmp.path(), "timed", ONE_FAILS, &["--timing"]);
    assert_eq!(out.status.code(), Some(2));
    let (header, rows) = csv_rows(&dir.join("bounds.csv"));
    let col = header.iter().position(|h| h == "runtime_ms").unwrap();
    assert!(rows.iter().all(|r| r[col].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn json_outputs_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (out, dir) = run_file(tmp.path(), "rt", ALL_PIPELINES, &["--trace"]);
    assert_eq!(out.status.code(), Some(0));
    let trace = fs::read_to_string(dir.join("trace.jsonl")).unwrap();
    let mut kinds = (0, 0);
    for line in trace.lines() {
        let ev: TraceEvent = serde_json::from_str(line).unwrap();
        match ev {
            TraceEvent::Oracle { .. } => kinds.0 += 1,
            TraceEvent::Solve { .. } => kinds.1 += 1,
        }
        assert_eq!(serde_json::to_string(&ev).unwrap(), line);
    }
    assert!(kinds.0 > 0 && kinds.1 > 0);
    let certs = fs::read_to_string(dir.join("certificates.jsonl")).unwrap();
    for line in certs.lines() {
        let rec: CertificateRecord = serde_json::from_str(line).unwrap();
        let again: CertificateRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(rec, again);
    }

    for text in [ALL_PIPELINES, ONE_FAILS] {
        let run = RunFile::parse(text).unwrap();
        let back = RunFile::parse(&serde_json::to_string(&run).unwrap()).unwrap();
        assert_eq!(run, back);
    }
}

#[test]
fn catalog_lists_the_pairings() {
    let out = wdro(&["catalog"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() >= 20, "{} rows", rows.len());
    assert!(rows.iter().any(|r| r.starts_with("HingePow × FeatureNormLabelIndicator ")));
    let sigmoid: Vec<_> = rows.iter().filter(|r| r.starts_with("HardSigmoid ")).collect();
    assert!(!sigmoid.is_empty());
    assert!(sigmoid.iter().all(|r| r.contains("conditional regime")));
    assert!(rows.iter().filter(|r| r.starts_with("AbsLinear ")).all(|r| r.contains("unconditional")));
}

#[test]
fn version_and_usage_errors() {
    let out = wdro(&["--version"], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("wdro "));
    assert_eq!(wdro(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(wdro(&["run", "x.json", "--out", "o", "--threads", "0"], &[]).status.code(), Some(1));
}
