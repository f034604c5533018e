//! End-to-end checks of the command-line interface: exit codes, the
//! machine-readable error channel, and the combine subcommand's contract.

use gibbscal::{combine, GaussianSummary, ScalingPolicy};
use nalgebra::{DMatrix, DVector};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbscal"))
}

/// Last stderr line parsed as the error envelope.
fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| {
        panic!("no JSON error line on stderr; stderr was:\n{text}");
    });
    serde_json::from_str(line).expect("stderr line is not valid JSON")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

/// A small straight-line dataset: y = 0.6x plus a deterministic wiggle.
fn write_line_csv(path: &Path) {
    let mut body = String::from("x,y\n");
    for i in 1..=30 {
        let x = i as f64 / 30.0;
        let y = 0.6 * x + 0.03 * (7.0 * x).sin();
        body.push_str(&format!("{x},{y}\n"));
    }
    fs::write(path, body).unwrap();
}

/// Minimal valid calibrate config; `alpha` and `extra` are injection points
/// for the failure tests.
fn config_toml(alpha: f64, extra: &str) -> String {
    format!(
        r#"schema_version = 1

[data]
experiments = ["line.csv"]

[model]
name = "straight-line"

[[prior.coordinates]]
kind = "uniform"
lo = 0.0
hi = 1.5

[loss]
variant = "l2"

[discrepancy]
kind = "shift-family"
region = [0.5, 1.0]
magnitude = [-0.1, 0.1]
noise_sd = 0.05

[tuning]
variant = "parametric-bootstrap"
seed = 3
b = 20
alpha = {alpha}
w_grid = [0.5, 1.0, 2.0]
n_iter = 600
n_burn = 100
{extra}
[outputs]
directory = "out"
"#
    )
}

fn setup_run(dir: &Path, alpha: f64, extra: &str) -> std::path::PathBuf {
    write_line_csv(&dir.join("line.csv"));
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config_toml(alpha, extra)).unwrap();
    cfg
}

#[test]
fn bad_alpha_exits_1_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup_run(dir.path(), 1.5, "");
    let out = bin().arg("calibrate").arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 1);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["exit_code"], 1);
    let msg = err["error"]["message"].as_str().unwrap();
    assert!(msg.contains("tuning.alpha"), "message should name the key: {msg}");
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup_run(dir.path(), 0.05, "typo_key = 3\n");
    let out = bin().arg("calibrate").arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 1);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("typo_key"));
}

#[test]
fn missing_data_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup_run(dir.path(), 0.05, "");
    fs::remove_file(dir.path().join("line.csv")).unwrap();
    let out = bin().arg("calibrate").arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    assert_eq!(error_json(&out)["error"]["kind"], "data");
}

#[test]
fn csv_without_y_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup_run(dir.path(), 0.05, "");
    fs::write(dir.path().join("line.csv"), "x,z\n0.1,0.2\n0.2,0.3\n").unwrap();
    let out = bin().arg("calibrate").arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    assert_eq!(error_json(&out)["error"]["exit_code"], 2);
}

#[test]
fn calibrate_honors_seed_override_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup_run(dir.path(), 0.05, "");
    let out = bin().args(["calibrate", "--seed", "9"]).arg(&cfg).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let outdir = dir.path().join("out");
    for name in [
        "run.json",
        "resolved-config.toml",
        "posterior-experiment-0.csv",
        "coverage-experiment-0.csv",
        "summary-experiment-0.json",
    ] {
        assert!(outdir.join(name).exists(), "missing artifact {name}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["root_seed"], 9);
    let resolved = fs::read_to_string(outdir.join("resolved-config.toml")).unwrap();
    assert!(resolved.contains("seed = 9"), "override must land in the resolved config");
}

#[test]
fn unknown_reproduce_target_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["reproduce", "nonsense", "--out"])
        .arg(dir.path().join("r"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 1);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("nonsense"));
}

fn write_summary(path: &Path, s: &GaussianSummary<f64>) {
    fs::write(path, serde_json::to_string_pretty(&s.to_json()).unwrap()).unwrap();
}

fn summary_2d(id: &str, mean: [f64; 2], cov: [[f64; 2]; 2]) -> GaussianSummary<f64> {
    GaussianSummary::new(
        id,
        500,
        DVector::from_row_slice(&mean),
        DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]),
    )
    .unwrap()
}

fn write_manifest(dir: &Path, names: &[&str]) -> std::path::PathBuf {
    let manifest = dir.join("manifest.json");
    let body = serde_json::json!({ "summaries": names });
    fs::write(&manifest, serde_json::to_string(&body).unwrap()).unwrap();
    manifest
}

#[test]
fn combine_of_one_summary_returns_it_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary_2d("only", [1.5, -0.3], [[2.0, 0.3], [0.3, 1.0]]);
    write_summary(&dir.path().join("s0.json"), &s);
    let manifest = write_manifest(dir.path(), &["s0.json"]);

    let outdir = dir.path().join("fused");
    let out = bin().arg("combine").arg(&manifest).args(["--out"]).arg(&outdir).output().unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let consensus: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("consensus.json")).unwrap()).unwrap();
    assert_eq!(consensus["n_experiments"], 1);
    assert_eq!(consensus["converged"], true);
    let mean = consensus["mean"].as_array().unwrap();
    assert!((mean[0].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert!((mean[1].as_f64().unwrap() + 0.3).abs() < 1e-9);
    let cov = consensus["cov"].as_array().unwrap();
    for (i, row_want) in [[2.0, 0.3], [0.3, 1.0]].iter().enumerate() {
        let row = cov[i].as_array().unwrap();
        for (j, want) in row_want.iter().enumerate() {
            assert!((row[j].as_f64().unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn combine_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_summary(&dir.path().join("a.json"), &summary_2d("a", [0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]]));
    let one_d =
        GaussianSummary::new("b", 500, DVector::from_row_slice(&[0.5]), DMatrix::from_row_slice(1, 1, &[2.0]))
            .unwrap();
    write_summary(&dir.path().join("b.json"), &one_d);
    let manifest = write_manifest(dir.path(), &["a.json", "b.json"]);

    let outdir = dir.path().join("fused");
    let out = bin().arg("combine").arg(&manifest).args(["--out"]).arg(&outdir).output().unwrap();
    assert_eq!(exit_code(&out), 2);
    assert_eq!(error_json(&out)["error"]["kind"], "data");
}

#[test]
fn combine_across_experiments_divides_variance_by_k() {
    let dir = tempfile::tempdir().unwrap();
    let cov = [[2.0, 0.4], [0.4, 1.0]];
    let parts: Vec<GaussianSummary<f64>> =
        (0..3).map(|i| summary_2d(&format!("e{i}"), [1.0, 2.0], cov)).collect();
    for (i, s) in parts.iter().enumerate() {
        write_summary(&dir.path().join(format!("s{i}.json")), s);
    }
    let manifest = write_manifest(dir.path(), &["s0.json", "s1.json", "s2.json"]);

    let outdir = dir.path().join("fused");
    let out = bin()
        .arg("combine")
        .arg(&manifest)
        .args(["--scaling", "across-experiments", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let expected = combine(&parts, ScalingPolicy::AcrossExperiments, 1e-8, 500).unwrap();
    let consensus: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("consensus.json")).unwrap()).unwrap();
    let got = consensus["cov"].as_array().unwrap();
    for i in 0..2 {
        let row = got[i].as_array().unwrap();
        for j in 0..2 {
            let want = cov[i][j] / 3.0;
            let v = row[j].as_f64().unwrap();
            assert!((v - want).abs() < 1e-9, "cov[{i}][{j}] = {v}, want {want}");
            assert!((v - expected.cov[(i, j)]).abs() < 1e-12, "CLI disagrees with library");
        }
    }

    let comparison = fs::read_to_string(outdir.join("comparison.csv")).unwrap();
    let mut lines = comparison.lines();
    assert_eq!(lines.next().unwrap(), "id,coordinate,mean,variance");
    // Three 2-coordinate inputs plus the consensus itself.
    assert_eq!(lines.count(), 8);
}
