//! Posterior fusion: reads per-experiment Gaussian summaries named by a
//! JSON manifest, computes the consensus posterior, and writes it next to
//! a per-subset comparison table.

use gibbscal::{combine, ConsensusPosterior, Error, GaussianSummary, Result, ScalingPolicy};
use std::fs;
use std::path::Path;

use crate::artifacts::{ensure_dir, write_atomic, write_json};

pub fn run(manifest_path: &Path, scaling: &str, tol: f64, out: &Path) -> Result<()> {
    let text = fs::read_to_string(manifest_path).map_err(|e| {
        Error::Data(format!("cannot read manifest {}: {e}", manifest_path.display()))
    })?;
    let manifest: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("manifest is not valid JSON: {e}")))?;
    let entries = manifest
        .get("summaries")
        .and_then(|v| v.as_array())
        .ok_or_else(|| Error::Data("manifest needs a \"summaries\" array".into()))?;
    if entries.is_empty() {
        return Err(Error::Data("manifest lists no summaries".into()));
    }

    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut summaries: Vec<GaussianSummary<f64>> = Vec::with_capacity(entries.len());
    for entry in entries {
        let rel = entry
            .as_str()
            .ok_or_else(|| Error::Data("summaries entries must be file paths".into()))?;
        let path = base.join(rel);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Data(format!("cannot read summary {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("summary {rel} is not valid JSON: {e}")))?;
        summaries.push(GaussianSummary::from_json(&value)?);
    }

    let policy = match scaling {
        "across-experiments" => ScalingPolicy::AcrossExperiments,
        _ => ScalingPolicy::WithinExperiment,
    };
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let consensus = combine(&summaries, policy, tol, 500)?;

    ensure_dir(out)?;
    let mut report = consensus.to_json();
    report["n_experiments"] = serde_json::json!(summaries.len());
    report["tol"] = serde_json::json!(tol);
    write_json(&out.join("consensus.json"), &report)?;
    write_atomic(
        &out.join("comparison.csv"),
        comparison_csv(&summaries, &consensus)?.as_bytes(),
    )?;

    println!(
        "consensus over {} summaries: mean = {:?}",
        summaries.len(),
        consensus.mean.iter().copied().collect::<Vec<_>>()
    );
    Ok(())
}

/// One row per (subset, coordinate) plus the consensus rows, so the pull
/// of each experiment on the fused posterior is visible at a glance.
fn comparison_csv(
    summaries: &[GaussianSummary<f64>],
    consensus: &ConsensusPosterior<f64>,
) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["id", "coordinate", "mean", "variance"])?;
    for s in summaries {
        for j in 0..s.dim() {
            wtr.write_record([
                s.id.clone(),
                j.to_string(),
                format!("{}", s.mean[j]),
                format!("{}", s.cov[(j, j)]),
            ])?;
        }
    }
    for j in 0..consensus.mean.len() {
        wtr.write_record([
            "consensus".to_string(),
            j.to_string(),
            format!("{}", consensus.mean[j]),
            format!("{}", consensus.cov[(j, j)]),
        ])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("csv encoding: {e}")))
}
