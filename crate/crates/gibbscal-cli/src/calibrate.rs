//! Configuration-driven calibration runs. For each experiment listed in
//! the config: fit a posterior mode, extract the empirical discrepancy,
//! build the discrepancy prior, choose a loss scale, sample the tempered
//! posterior, and write the artifacts (residual CSV, coverage CSV,
//! posterior CSV plus sidecar, Gaussian summary JSON). A run manifest ties
//! everything together and embeds the resolved config.

use gibbscal::{
    combine, credible_interval, fit_gp_mle, gaussianize, kernel_ess, map_estimate,
    parametric_bootstrap_coverage, sample_gibbs, seed, select_loss_scale, BootstrapConfig,
    CalibrationProblem, DiscrepancyKind, DiscrepancyPrior, Error, ExperimentData,
    ForwardModel, GaussianSummary, MapConfig, ParameterPrior, Result, SamplerConfig,
    SqExpKernel,
};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::artifacts::{ensure_dir, write_atomic, write_json, write_via};
use crate::config::RunConfig;

pub fn run(config_path: &Path, seed_override: Option<u64>) -> Result<()> {
    let cfg = RunConfig::load(config_path)?.resolved(seed_override);
    let base = config_path.parent().unwrap_or_else(|| Path::new("."));
    let out_dir = base.join(&cfg.outputs.directory);
    ensure_dir(&out_dir)?;

    let model = cfg.model.build()?;
    let prior = cfg.prior.build()?;

    let mut entries = Vec::new();
    let mut summary_files = Vec::new();
    let mut summaries: Vec<GaussianSummary<f64>> = Vec::new();
    for (k, rel) in cfg.data.experiments.iter().enumerate() {
        let data_path = base.join(rel);
        let data = ExperimentData::<f64>::from_csv(&data_path)?;
        let (entry, summary) =
            calibrate_experiment(k, rel, &data, &cfg, model.as_dyn(), &prior, &out_dir)?;
        entries.push(entry);
        summary_files.push(format!("summary-experiment-{k}.json"));
        summaries.push(summary);
    }

    // With several experiments the run ends in a fused consensus under the
    // configured scaling policy.
    let consensus = if summaries.len() >= 2 {
        let fused = combine(&summaries, cfg.ensemble.policy()?, cfg.ensemble.tol, 500)?;
        write_json(&out_dir.join("consensus.json"), &fused.to_json())?;
        Some("consensus.json")
    } else {
        None
    };

    let resolved_toml = cfg.to_toml()?;
    write_atomic(&out_dir.join("resolved-config.toml"), resolved_toml.as_bytes())?;
    let manifest = serde_json::json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        // Sole timestamp in the artifact set; everything else is a pure
        // function of the resolved config.
        "generated_at_unix": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "root_seed": cfg.tuning.seed,
        "config": resolved_toml,
        "experiments": entries,
        "summaries": summary_files,
        "consensus": consensus,
    });
    write_json(&out_dir.join("run.json"), &manifest)?;
    println!("calibration run complete: {}", out_dir.display());
    Ok(())
}

fn calibrate_experiment(
    k: usize,
    data_file: &str,
    data: &ExperimentData<f64>,
    cfg: &RunConfig,
    model: &dyn ForwardModel<f64>,
    prior: &ParameterPrior<f64>,
    out_dir: &Path,
) -> Result<(serde_json::Value, GaussianSummary<f64>)> {
    let loss = cfg.loss.build()?;
    let problem = CalibrationProblem::new(loss, prior, model, data)?;
    let root = cfg.tuning.seed;
    let theta_dim = model.param_dim();

    // Posterior mode at full weight anchors the empirical discrepancy.
    let map = map_estimate(
        &problem.spec(1.0)?,
        &MapConfig { restarts: 8, seed: seed::derive(root, "map", &[k as u64]) },
    )?;
    let resid = gibbscal::empirical_discrepancy(data, model, &map[..theta_dim]);
    let resid_file = format!("discrepancy-experiment-{k}.csv");
    write_atomic(&out_dir.join(&resid_file), residual_csv(data.x(), &resid)?.as_bytes())?;

    let (disc, kernel) = build_discrepancy(cfg, data, &resid)?;

    let alpha = cfg.tuning.alpha.unwrap_or(0.05);
    let mut curve_file = None;
    let mut effective_n = None;
    let w_hat = match cfg.tuning.variant.as_str() {
        "parametric-bootstrap" => {
            let disc = disc.as_ref().ok_or_else(|| {
                Error::Config(
                    "tuning.variant: parametric-bootstrap needs a discrepancy kind other \
                     than none"
                        .into(),
                )
            })?;
            let bcfg = BootstrapConfig {
                b: cfg.tuning.b.unwrap_or(100),
                w_grid: cfg.tuning.w_grid.clone().unwrap_or_default(),
                alpha,
                block_length: None,
                intervals: cfg.tuning.interval_method(),
                seed: seed::derive(root, "tune", &[k as u64]),
            };
            let curve = parametric_bootstrap_coverage(&problem, disc, &bcfg)?;
            let name = format!("coverage-experiment-{k}.csv");
            write_via(&out_dir.join(&name), |p| curve.write_csv(p))?;
            curve_file = Some(name);
            select_loss_scale(&curve, cfg.tuning.target.unwrap_or(1.0 - alpha))?
        }
        "effective-sample-size" => {
            let kernel = kernel.as_ref().ok_or_else(|| {
                Error::Config(
                    "tuning.variant: effective-sample-size needs a GP discrepancy \
                     (gp-empirical-bayes or gp-explicit)"
                        .into(),
                )
            })?;
            let n_e = kernel_ess(kernel, data.x());
            effective_n = Some(n_e);
            n_e / data.len() as f64
        }
        _ => cfg.tuning.w.expect("validated: fixed variant carries w"),
    };

    let sample = sample_gibbs(
        &problem.spec(w_hat)?,
        &SamplerConfig {
            n_iter: cfg.tuning.n_iter.unwrap_or(4000),
            n_burn: cfg.tuning.n_burn.unwrap_or(1000),
            step_sizes: None,
            seed: seed::derive(root, "chain", &[k as u64]),
        },
    )?;
    let posterior_file = format!("posterior-experiment-{k}.csv");
    write_via(&out_dir.join(&posterior_file), |p| sample.write_csv(p))?;
    write_via(&out_dir.join(format!("posterior-experiment-{k}.meta.json")), |p| {
        sample.write_sidecar_json(p)
    })?;

    let interval = credible_interval(&sample, alpha)?;
    let summary = gaussianize(&sample.retain_leading(theta_dim), format!("experiment-{k}"))?;
    write_json(&out_dir.join(format!("summary-experiment-{k}.json")), &summary.to_json())?;

    println!(
        "experiment {k}: w = {w_hat:.4}, posterior mean = {:.4}",
        summary.mean[0]
    );
    let entry = serde_json::json!({
        "id": format!("experiment-{k}"),
        "data": data_file,
        "n": data.len(),
        "loss_scale": w_hat,
        "effective_n": effective_n,
        "map": map,
        "kernel": kernel.as_ref().map(|kk| serde_json::json!({
            "s2": kk.s2, "length_scale": kk.length_scale, "nugget": kk.nugget,
        })),
        "interval_alpha": alpha,
        "intervals": interval.bounds.iter().map(|&(lo, hi)| vec![lo, hi]).collect::<Vec<_>>(),
        "acceptance_rate": sample.acceptance_rate,
        "artifacts": {
            "discrepancy": resid_file,
            "coverage": curve_file,
            "posterior": posterior_file,
        },
    });
    Ok((entry, summary))
}

fn residual_csv(x: &[f64], resid: &[f64]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["x", "residual"])?;
    for (xi, ri) in x.iter().zip(resid) {
        wtr.write_record([format!("{xi}"), format!("{ri}")])?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("csv encoding: {e}")))
}

/// Builds the replicate-generating discrepancy prior and, when one is
/// available, the GP kernel that effective-sample-size tuning needs.
fn build_discrepancy(
    cfg: &RunConfig,
    data: &ExperimentData<f64>,
    resid: &[f64],
) -> Result<(Option<DiscrepancyPrior<f64>>, Option<SqExpKernel<f64>>)> {
    let spec = &cfg.discrepancy;
    match spec.kind.as_str() {
        "none" => Ok((None, None)),
        "gp-empirical-bayes" => {
            let x = data.x();
            let msq =
                (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).max(1e-12);
            let range = x[x.len() - 1] - x[0];
            let init = SqExpKernel::new(msq, 0.1 * range, 1e-3 * msq)?;
            let fitted = fit_gp_mle(resid, x, &init)?;
            let noise_sd = spec.noise_sd.unwrap_or_else(|| fitted.nugget.max(0.0).sqrt());
            let prior = DiscrepancyPrior::new(
                DiscrepancyKind::Gp { kernel: fitted.clone(), grid: x.to_vec() },
                noise_sd,
            )?;
            Ok((Some(prior), Some(fitted)))
        }
        "gp-explicit" => {
            let kernel = SqExpKernel::new(
                spec.s2.expect("validated"),
                spec.length_scale.expect("validated"),
                spec.nugget.unwrap_or(0.0),
            )?;
            let prior = DiscrepancyPrior::new(
                DiscrepancyKind::Gp { kernel: kernel.clone(), grid: data.x().to_vec() },
                spec.noise_sd.expect("validated"),
            )?;
            Ok((Some(prior), Some(kernel)))
        }
        _ => {
            let [rlo, rhi] = spec.region.expect("validated");
            let [mlo, mhi] = spec.magnitude.expect("validated");
            let prior = DiscrepancyPrior::new(
                DiscrepancyKind::ShiftFamily { region: (rlo, rhi), magnitude: (mlo, mhi) },
                spec.noise_sd.expect("validated"),
            )?;
            Ok((Some(prior), None))
        }
    }
}
