//! End-to-end runs of the `fairaudit` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairaudit::cli::commands::synth;
use fairaudit::dataset::SynthConfig;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairaudit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not json ({e}): {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path, name: &str, cfg: &SynthConfig) -> PathBuf {
    let path = dir.join(name);
    synth(cfg, &path).unwrap();
    path
}

/// Two groups with equal label rates; `f1` separates the label with a
/// wide margin.
fn perfect_fixture(dir: &Path) -> PathBuf {
    let mut csv = String::from("f1,f2,y,g\n");
    for i in 0..400 {
        let y = (i / 2) % 2;
        let x = if y == 1 {
            3.0 + (i % 7) as f64 * 0.1
        } else {
            -3.0 - (i % 5) as f64 * 0.1
        };
        let g = if (i / 4) % 2 == 0 { "a" } else { "b" };
        csv.push_str(&format!("{x},{},{y},{g}\n", (i % 11) as f64 * 0.05));
    }
    let data = dir.join("perfect.csv");
    std::fs::write(&data, csv).unwrap();
    std::fs::write(
        dir.join("perfect.schema.json"),
        r#"{"columns": {"f1": "feature", "f2": "feature", "y": "label", "g": "protected"}}"#,
    )
    .unwrap();
    data
}

#[test]
fn synth_is_deterministic_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.json");
    std::fs::write(&cfg, r#"{"n": 1000, "p": 20, "k": 9, "attributes": [
        {"name": "gender", "levels": ["female", "male"], "weights": [1, 1], "unspecified_rate": 0.03},
        {"name": "ethnicity", "levels": ["white", "black", "asian"], "weights": [0.7, 0.2, 0.1], "unspecified_rate": 0.3},
        {"name": "age", "levels": ["under_40", "over_40"], "weights": [1, 1], "unspecified_rate": 0.0002}],
        "label_rates": [0.05, 0.24, 0.04, 0.08, 0.06, 0.02, 0.07, 0.16, 0.05], "seed": 9}"#)
        .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = run(&["synth", "--config", path_str(&cfg), "--out", path_str(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1001);

    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.schema.json")).unwrap())
            .unwrap();
    let header: Vec<&str> = lines[0].split(',').collect();
    let count = |role: &str| {
        header
            .iter()
            .filter(|c| schema["columns"][**c] == role)
            .count()
    };
    assert_eq!(
        (count("feature"), count("label"), count("protected")),
        (20, 9, 3)
    );
}

#[test]
fn synth_seed_flag_changes_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run(&["synth", "--out", path_str(&a), "--seed", "1"])
        .status
        .success());
    assert!(run(&["synth", "--out", path_str(&b), "--seed", "2"])
        .status
        .success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn perfect_predictor_has_no_error_disparity() {
    let dir = tempfile::tempdir().unwrap();
    let data = perfect_fixture(dir.path());
    let o = run(&["audit", "--data", path_str(&data)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = stdout_json(&o);
    assert!(report["skipped_disparities"].as_array().unwrap().is_empty());
    let mut seen = 0;
    for d in report["disparities"].as_array().unwrap() {
        // a perfect predictor's selection rate is the group base rate, so only
        // the error-type metrics are forced to zero
        if d["metric"] != "selection_rate" {
            assert_eq!(d["value"].as_f64().unwrap(), 0.0, "{d}");
            seen += 1;
        }
    }
    assert_eq!(seen, 9);
    let error_metrics = "accuracy,precision,recall,fpr,fnr,f1,error,ppv,npv";
    let gated = run(&[
        "audit",
        "--data",
        path_str(&data),
        "--metrics",
        error_metrics,
        "--fail-threshold",
        "0",
    ]);
    assert_eq!(gated.status.code(), Some(0));
    for c in report["cells"].as_array().unwrap() {
        if c["metric"] == "accuracy" {
            assert_eq!(c["value"].as_f64(), Some(1.0));
        }
    }
}

#[test]
fn planted_gap_breaches_the_fail_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(4000, 3));
    let o = run(&[
        "audit",
        "--data",
        path_str(&data),
        "--fail-threshold",
        "0.1",
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = stdout_json(&o);
    let breaches = report["breaches"].as_array().unwrap();
    let sel = breaches
        .iter()
        .find(|b| b["metric"] == "selection_rate" && b["label"] == "label_1")
        .expect("selection-rate breach on the planted label");
    assert!(sel["value"].as_f64().unwrap() > 0.1);
    assert_eq!(sel["max_group"], "b");
    assert_eq!(sel["min_group"], "a");
    // the unaffected label stays below the threshold
    assert!(!breaches
        .iter()
        .any(|b| b["metric"] == "selection_rate" && b["label"] == "label_2"));
}

#[test]
fn metrics_flag_filters_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(2000, 4));
    let o = run(&[
        "audit",
        "--data",
        path_str(&data),
        "--metrics",
        "recall,fpr",
    ]);
    assert!(o.status.success());
    let report = stdout_json(&o);
    let mut metrics: Vec<String> = report["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["metric"].as_str().unwrap().to_string())
        .collect();
    metrics.dedup();
    assert_eq!(metrics, vec!["recall_tpr", "fpr"]);

    let csv = run(&[
        "audit",
        "--data",
        path_str(&data),
        "--metrics",
        "fpr",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("metric,label,group,group_size,value,status\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("fpr,")));
}

#[test]
fn audit_bundle_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(2000, 5));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(
            run(&["audit", "--data", path_str(&data), "--out", path_str(out)])
                .status
                .success()
        );
    }
    for f in [
        "report.json",
        "cells.csv",
        "disparities.csv",
        "tensor.csv",
        "model.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let report: Value =
        serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert!(report.get("timestamps").is_none());
    assert_eq!(report["report_version"], "1.0");
    assert!(a.join("timestamps.json").exists());
}

#[test]
fn single_permutation_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(
        dir.path(),
        "proxy.csv",
        &SynthConfig::planted_proxy(600, 3, 0.0, 6),
    );
    let o = run(&[
        "proxy",
        "--data",
        path_str(&data),
        "--attrs",
        "gender",
        "--permutations",
        "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    for level in report["results"][0]["levels"].as_array().unwrap() {
        let p = level["result"]["p_value"].as_f64().unwrap();
        assert!(p == 0.5 || p == 1.0, "{p}");
    }
}

#[test]
fn planted_proxy_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(
        dir.path(),
        "proxy.csv",
        &SynthConfig::planted_proxy(2000, 3, 1.0, 7),
    );
    let o = run(&[
        "proxy",
        "--data",
        path_str(&data),
        "--attrs",
        "gender",
        "--levels",
        "female",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..2], &["gender", "female"]);
    assert!(row[5].parse::<f64>().unwrap() <= 1.0 / 201.0);
}

#[test]
fn decompose_writes_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(2000, 8));
    let out = dir.path().join("dec");
    let o = run(&[
        "decompose",
        "--data",
        path_str(&data),
        "--label",
        "label_1",
        "--bias",
        "error",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    assert_eq!(report["bias"], "error");
    assert_eq!(report["label"], "label_1");
    assert!(report["fit"]["delta"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "group=b"));
    let csv = std::fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(csv.starts_with("name,block,estimate,std_error,t,ci_low,ci_high\nintercept,intercept,"));
}

#[test]
fn threshold_mitigation_closes_the_gap_on_fitting_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(4000, 10));
    let o = run(&[
        "mitigate",
        "--data",
        path_str(&data),
        "--strategy",
        "thresholds",
        "--label",
        "label_1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    let disparity = |part: &Value| {
        part["disparities"]
            .as_array()
            .unwrap()
            .iter()
            .find(|d| d["metric"] == "selection_rate" && d["label"] == "label_1")
            .unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert!(disparity(&report["before"]["train"]) > 0.1);
    assert!(disparity(&report["after"]["train"]) <= 0.02);
    assert_eq!(report["policy"]["achieved"][0], true);
    assert!(!report["tradeoff"].as_array().unwrap().is_empty());
}

#[test]
fn vacuous_egr_keeps_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(3000, 11));
    let o = run(&[
        "mitigate",
        "--data",
        path_str(&data),
        "--strategy",
        "egr",
        "--epsilon",
        "1",
        "--label",
        "label_1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout_json(&o);
    let agreement = report["outcomes"][0]["agreement"].as_f64().unwrap();
    assert!(agreement >= 0.99, "{agreement}");
}

#[test]
fn egr_runs_with_singleton_intersections() {
    // all three default attributes crossed leave some groups with one row
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(
        dir.path(),
        "adopt.csv",
        &SynthConfig {
            seed: 7,
            ..SynthConfig::default()
        },
    );
    let o = run(&[
        "mitigate",
        "--data",
        path_str(&data),
        "--strategy",
        "egr",
        "--epsilon",
        "0.02",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout_json(&o)["tradeoff"].as_array().unwrap().is_empty());
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let o = run(&["mitigate", "--data", "x.csv", "--strategy", "reweigh"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
    assert_eq!(err["error"]["exit_code"], 1);
}

#[test]
fn load_failure_is_structured_json() {
    let o = run(&["audit", "--data", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("/nonexistent/data.csv"));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture(dir.path(), "gap.csv", &SynthConfig::planted_gap(2000, 12));
    let cfg = dir.path().join("audit.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "metrics": ["accuracy"], "holdout_fraction": 0.5}"#,
    )
    .unwrap();
    let o = run(&[
        "audit",
        "--data",
        path_str(&data),
        "--config",
        path_str(&cfg),
        "--seed",
        "6",
    ]);
    assert!(o.status.success());
    let report = stdout_json(&o);
    assert_eq!(report["metadata"]["seed"], 6);
    assert_eq!(report["metadata"]["n_evaluated"], 1000);
    assert_eq!(report["config"]["metrics"], serde_json::json!(["accuracy"]));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mitigate"));
}
