//! Frozen-seed reruns of the bundled studies, with golden-file checks.
//! The goldens shipped next to this crate were produced by the same code
//! paths on a clean build; `--check` re-runs a study and verifies the
//! fresh numbers against them using the study's documented tolerances, so
//! cross-platform floating-point drift is allowed but regressions fail.

use gibbscal::harness::{
    run_ensemble_demo, run_toy, simulation_table, SimTable, SyntheticEnsembleSpec,
    ToyMethod, ToyProblemSpec, ToyReport,
};
use gibbscal::{Error, Result};
use std::path::Path;

use crate::artifacts::{ensure_dir, write_json, write_via};

const GOLDEN_TOY: &str = include_str!("../goldens/toy.json");
const GOLDEN_TABLE: &str = include_str!("../goldens/simulation-table.csv");
const GOLDEN_ENSEMBLE: &str = include_str!("../goldens/ensemble-demo.json");

/// Interval-endpoint tolerance per toy method, mirroring the gate used by
/// the acceptance tests.
fn toy_endpoint_tol(method: &str) -> f64 {
    match method {
        "mle" => 0.02,
        "gls-koh" => 0.04,
        "ess-power" => 0.08,
        _ => 0.05,
    }
}

/// Coverage tolerance for simulation-table rows.
const TABLE_COVERAGE_TOL: f64 = 0.07;
/// Scales (E_w, tuned w) must agree with the golden within this factor.
const SCALE_FACTOR_TOL: f64 = 2.0;
/// Consensus means must agree with the golden within this distance.
const ENSEMBLE_MEAN_TOL: f64 = 0.1;

pub fn run(target: &str, out: &Path, check: bool, n_mc: Option<usize>) -> Result<()> {
    if n_mc.is_some() && target != "simulation-table" {
        return Err(Error::Config(
            "--n-mc only applies to the simulation-table target".into(),
        ));
    }
    match target {
        "toy" => reproduce_toy(out, check),
        "simulation-table" => reproduce_table(out, check, n_mc.unwrap_or(100)),
        "ensemble-demo" => reproduce_ensemble(out, check),
        other => Err(Error::Config(format!(
            "unknown reproduce target '{other}' (expected toy, simulation-table, or \
             ensemble-demo)"
        ))),
    }
}

fn finish_checks(study: &str, violations: Vec<String>) -> Result<()> {
    if violations.is_empty() {
        println!("{study}: all golden checks passed");
        return Ok(());
    }
    for v in &violations {
        eprintln!("golden mismatch: {v}");
    }
    Err(Error::Precision(format!(
        "golden check failed for {study}: {} mismatch(es)",
        violations.len()
    )))
}

fn reproduce_toy(out: &Path, check: bool) -> Result<()> {
    ensure_dir(out)?;
    let spec: ToyProblemSpec<f64> = ToyProblemSpec::default();
    let report = run_toy(&spec, &ToyMethod::ALL)?;
    write_json(&out.join("toy.json"), &report.to_json())?;
    if let Some(curve) = &report.bootstrap_curve {
        write_via(&out.join("toy-coverage.csv"), |p| curve.write_csv(p))?;
    }
    for r in &report.results {
        println!(
            "toy {}: estimate {:.4}, interval ({:.4}, {:.4})",
            r.method.label(),
            r.estimate,
            r.interval.0,
            r.interval.1
        );
    }
    if !check {
        return Ok(());
    }
    finish_checks("toy", toy_violations(&report)?)
}

fn toy_violations(report: &ToyReport<f64>) -> Result<Vec<String>> {
    let golden: serde_json::Value = serde_json::from_str(GOLDEN_TOY)
        .map_err(|e| Error::Precision(format!("toy golden is unreadable: {e}")))?;
    let mut violations = Vec::new();
    let golden_results = golden["results"]
        .as_array()
        .ok_or_else(|| Error::Precision("toy golden has no results".into()))?;
    for g in golden_results {
        let name = g["method"].as_str().unwrap_or("?");
        let tol = toy_endpoint_tol(name);
        let Some(fresh) = report.results.iter().find(|r| r.method.label() == name) else {
            violations.push(format!("method {name} missing from the fresh run"));
            continue;
        };
        for (what, got, want) in [
            ("lower", fresh.interval.0, g["lower"].as_f64().unwrap_or(f64::NAN)),
            ("upper", fresh.interval.1, g["upper"].as_f64().unwrap_or(f64::NAN)),
            ("estimate", fresh.estimate, g["estimate"].as_f64().unwrap_or(f64::NAN)),
        ] {
            if !((got - want).abs() <= tol) {
                violations.push(format!(
                    "toy {name} {what}: got {got:.4}, golden {want:.4}, tol {tol}"
                ));
            }
        }
        if let Some(want) = g["loss_scale"].as_f64() {
            let got = fresh.loss_scale.unwrap_or(f64::NAN);
            if !(got / want <= SCALE_FACTOR_TOL && want / got <= SCALE_FACTOR_TOL) {
                violations
                    .push(format!("toy {name} loss scale: got {got:.3}, golden {want:.3}"));
            }
        }
        if let Some(want) = g["effective_n"].as_f64() {
            let got = fresh.effective_n.unwrap_or(f64::NAN);
            if !((got - want).abs() <= 0.5) {
                violations
                    .push(format!("toy {name} effective n: got {got:.2}, golden {want:.2}"));
            }
        }
    }
    Ok(violations)
}

fn reproduce_table(out: &Path, check: bool, n_mc: usize) -> Result<()> {
    ensure_dir(out)?;
    let table = simulation_table(n_mc, 0)?;
    write_via(&out.join("simulation-table.csv"), |p| table.write_csv(p))?;
    write_json(&out.join("simulation-table.json"), &table.to_json())?;
    for row in &table.rows {
        println!(
            "table {} autocorr {} {}: E_w {:.4}, coverage {:.3}",
            row.setting.method.label(),
            row.setting.autocorr.label(),
            row.setting.tuning.label(),
            row.result.e_w,
            row.result.coverage
        );
    }
    if !check {
        return Ok(());
    }
    finish_checks("simulation-table", table_violations(&table)?)
}

fn table_violations(table: &SimTable) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(GOLDEN_TABLE.as_bytes());
    let mut violations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Precision(format!("table golden: {e}")))?;
        let (method, autocorr, tuning) = (&record[0], &record[1], &record[2]);
        let want_ew: f64 = record[3]
            .parse()
            .map_err(|e| Error::Precision(format!("table golden E_w: {e}")))?;
        let want_cov: f64 = record[4]
            .parse()
            .map_err(|e| Error::Precision(format!("table golden coverage: {e}")))?;
        let Some(row) = table.rows.iter().find(|r| {
            r.setting.method.label() == method
                && r.setting.autocorr.label() == autocorr
                && r.setting.tuning.label() == tuning
        }) else {
            violations.push(format!("row {method}/{autocorr}/{tuning} missing"));
            continue;
        };
        let (ew, cov) = (row.result.e_w, row.result.coverage);
        if !(ew / want_ew <= SCALE_FACTOR_TOL && want_ew / ew <= SCALE_FACTOR_TOL) {
            violations.push(format!(
                "row {method}/{autocorr}/{tuning} E_w: got {ew:.4}, golden {want_ew:.4}"
            ));
        }
        if !((cov - want_cov).abs() <= TABLE_COVERAGE_TOL) {
            violations.push(format!(
                "row {method}/{autocorr}/{tuning} coverage: got {cov:.3}, golden {want_cov:.3}"
            ));
        }
    }
    Ok(violations)
}

fn reproduce_ensemble(out: &Path, check: bool) -> Result<()> {
    ensure_dir(out)?;
    let spec: SyntheticEnsembleSpec<f64> = SyntheticEnsembleSpec::default();
    let report = run_ensemble_demo(&spec)?;
    let json = report.to_json();
    write_json(&out.join("ensemble-demo.json"), &json)?;
    println!(
        "ensemble: {} experiments, consensus means {:.4} (bootstrap) / {:.4} (ess)",
        report.experiments.len(),
        report.consensus_bootstrap.mean[0],
        report.consensus_ess.mean[0]
    );
    if !check {
        return Ok(());
    }
    let golden: serde_json::Value = serde_json::from_str(GOLDEN_ENSEMBLE)
        .map_err(|e| Error::Precision(format!("ensemble golden is unreadable: {e}")))?;
    let mut violations = Vec::new();
    let fresh_k = report.experiments.len();
    let golden_k = golden["experiments"].as_array().map(|a| a.len()).unwrap_or(0);
    if fresh_k != golden_k {
        violations.push(format!("experiment count: got {fresh_k}, golden {golden_k}"));
    }
    for (name, fresh) in [
        ("consensus_bootstrap", &report.consensus_bootstrap),
        ("consensus_ess", &report.consensus_ess),
    ] {
        let want_mean = golden[name]["mean"][0].as_f64().unwrap_or(f64::NAN);
        let want_var = golden[name]["cov"][0][0].as_f64().unwrap_or(f64::NAN);
        let got_mean = fresh.mean[0];
        let got_sd = fresh.cov[(0, 0)].sqrt();
        let want_sd = want_var.sqrt();
        if !((got_mean - want_mean).abs() <= ENSEMBLE_MEAN_TOL) {
            violations.push(format!(
                "{name} mean: got {got_mean:.4}, golden {want_mean:.4}"
            ));
        }
        if !(got_sd / want_sd <= SCALE_FACTOR_TOL && want_sd / got_sd <= SCALE_FACTOR_TOL) {
            violations.push(format!("{name} sd: got {got_sd:.4}, golden {want_sd:.4}"));
        }
    }
    finish_checks("ensemble-demo", violations)
}
