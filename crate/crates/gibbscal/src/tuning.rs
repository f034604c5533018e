//! Loss-scale tuning: estimate frequentist coverage of tempered-posterior
//! credible intervals over a grid of scales by bootstrap, then pick the
//! scale whose coverage hits the nominal level.
//!
//! Three bootstrap schemes are provided. The prior-draw parametric scheme
//! simulates (θ, δ, ε) from their priors and checks how often each
//! replicate's interval covers its generating θ. The MAP-replicate scheme
//! simulates around the observed-data fit and checks how often replicate
//! point estimates fall in the single observed-data interval. The block
//! scheme resamples residual blocks to preserve autocorrelation without a
//! discrepancy prior.

use std::path::Path;

use rand::Rng;

use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::gp::DiscrepancyPrior;
use crate::loss::{sum_squared_residuals, LossFunction, VarianceMode};
use crate::model::ForwardModel;
use crate::num::Scalar;
use crate::optim::{multistart_nelder_mead, second_derivative, OptimOptions};
use crate::prior::{Marginal, ParameterPrior};
use crate::sampler::{
    interval_from_draws, map_estimate, sample_gibbs, GibbsPosteriorSpec, MapConfig,
    SamplerConfig,
};
use crate::seed;
use crate::stats;

/// Everything defining a calibration target except the loss scale.
#[derive(Clone, Copy)]
pub struct CalibrationProblem<'a, S: Scalar> {
    pub loss: LossFunction<S>,
    pub prior: &'a ParameterPrior<S>,
    pub model: &'a dyn ForwardModel<S>,
    pub data: &'a ExperimentData<S>,
}

impl<'a, S: Scalar> CalibrationProblem<'a, S> {
    pub fn new(
        loss: LossFunction<S>,
        prior: &'a ParameterPrior<S>,
        model: &'a dyn ForwardModel<S>,
        data: &'a ExperimentData<S>,
    ) -> Result<Self> {
        // Reuse the posterior-spec dimension checks.
        GibbsPosteriorSpec::new(loss, prior, model, data, S::zero())?;
        Ok(Self { loss, prior, model, data })
    }

    pub fn spec(&self, w: S) -> Result<GibbsPosteriorSpec<'a, S>> {
        GibbsPosteriorSpec::new(self.loss, self.prior, self.model, self.data, w)
    }

    fn theta_dim(&self) -> usize {
        self.model.param_dim()
    }
}

/// How replicate credible intervals are computed during tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalMethod {
    /// Full MCMC per replicate and scale.
    Mcmc { n_iter: usize, n_burn: usize },
    /// Deterministic mode-plus-curvature approximation whose interval
    /// family matches the posterior family of the loss (Student-t when the
    /// observation variance is latent, Gaussian otherwise), truncated to
    /// the prior support.
    Laplace,
}

impl Default for IntervalMethod {
    fn default() -> Self {
        IntervalMethod::Mcmc { n_iter: 4000, n_burn: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapConfig<S> {
    /// Replicate count B.
    pub b: usize,
    /// Strictly increasing positive scales, typically log-spaced.
    pub w_grid: Vec<S>,
    /// Interval level parameter; intervals are equal-tailed at 1−α.
    pub alpha: f64,
    /// Block width in x units (block-bootstrap variant only).
    pub block_length: Option<S>,
    pub intervals: IntervalMethod,
    pub seed: u64,
}

impl<S: Scalar> BootstrapConfig<S> {
    fn validate(&self) -> Result<()> {
        if self.b < 20 {
            return Err(Error::Config(format!(
                "bootstrap needs B >= 20 replicates, got {}",
                self.b
            )));
        }
        if self.w_grid.is_empty() {
            return Err(Error::Config("scale grid is empty".into()));
        }
        if !(self.w_grid[0] > S::zero()) {
            return Err(Error::Config("scale grid must be positive".into()));
        }
        if self.w_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("scale grid must be strictly increasing".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0,1)", self.alpha)));
        }
        Ok(())
    }
}

/// Log-spaced default grid: 35 points spanning [1e-3, 10].
pub fn default_w_grid<S: Scalar>() -> Vec<S> {
    let (lo, hi, n) = (1e-3f64, 10.0f64, 35);
    (0..n)
        .map(|i| S::of((lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint<S> {
    pub w: S,
    pub coverage: f64,
    /// Binomial standard error sqrt(ĉ(1−ĉ)/B).
    pub stderr: f64,
}

/// Estimated coverage ĉ(w) over the scale grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve<S> {
    pub points: Vec<CoveragePoint<S>>,
    /// Successful replicate count behind each estimate.
    pub b: usize,
    pub alpha: f64,
    /// Replicates dropped because interval construction failed.
    pub failed: usize,
}

impl<S: Scalar> CoverageCurve<S> {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["w", "coverage", "stderr", "B"])?;
        for p in &self.points {
            wtr.write_record([
                format!("{}", p.w.f64()),
                format!("{}", p.coverage),
                format!("{}", p.stderr),
                format!("{}", self.b),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn assemble_curve<S: Scalar>(
    w_grid: &[S],
    sums: &[f64],
    successes: usize,
    total: usize,
    alpha: f64,
) -> Result<CoverageCurve<S>> {
    let failed = total - successes;
    if failed * 5 > total {
        return Err(Error::Tuning(format!(
            "{failed} of {total} bootstrap replicates failed; results would be unreliable"
        )));
    }
    if successes == 0 {
        return Err(Error::Tuning("all bootstrap replicates failed".into()));
    }
    let points = w_grid
        .iter()
        .zip(sums)
        .map(|(&w, &s)| {
            let c = s / successes as f64;
            CoveragePoint { w, coverage: c, stderr: stats::binomial_se(c, successes) }
        })
        .collect();
    Ok(CoverageCurve { points, b: successes, alpha, failed })
}

/// Mean per-coordinate indicator of `theta` lying inside `bounds`.
fn coverage_indicator<S: Scalar>(theta: &[S], bounds: &[(S, S)]) -> f64 {
    let hit = theta
        .iter()
        .zip(bounds)
        .filter(|(t, (lo, hi))| lo <= *t && *t <= hi)
        .count();
    hit as f64 / bounds.len() as f64
}

/// Credible interval for each physical coordinate of the problem at scale
/// `w`, by the configured method.
fn replicate_intervals<S: Scalar>(
    problem: &CalibrationProblem<'_, S>,
    w: S,
    cfg: &BootstrapConfig<S>,
    replicate: u64,
) -> Result<Vec<(S, S)>> {
    match cfg.intervals {
        IntervalMethod::Laplace => laplace_intervals(problem, w, cfg.alpha),
        IntervalMethod::Mcmc { n_iter, n_burn } => {
            let spec = problem.spec(w)?;
            let sampler_cfg = SamplerConfig {
                n_iter,
                n_burn,
                step_sizes: None,
                seed: seed::derive(
                    cfg.seed,
                    "boot-interval",
                    &[replicate, w.f64().to_bits()],
                ),
            };
            let sample = sample_gibbs(&spec, &sampler_cfg)?;
            Ok((0..problem.theta_dim())
                .map(|j| interval_from_draws(&sample.column(j), cfg.alpha))
                .collect())
        }
    }
}

/// Prior-draw parametric bootstrap: coverage of the generating θ.
///
/// As w → 0 with a proper prior the intervals widen to the prior's own
/// equal-tailed interval, so ĉ tends to 1−α; with strong discrepancy and
/// large w the intervals concentrate on a biased point and ĉ falls.
pub fn parametric_bootstrap_coverage<S: Scalar>(
    problem: &CalibrationProblem<'_, S>,
    disc: &DiscrepancyPrior<S>,
    cfg: &BootstrapConfig<S>,
) -> Result<CoverageCurve<S>> {
    cfg.validate()?;
    let x = problem.data.x();
    let theta_dim = problem.theta_dim();
    let mut sums = vec![0.0; cfg.w_grid.len()];
    let mut successes = 0usize;

    for b in 0..cfg.b {
        let mut rng = seed::stream(cfg.seed, "boot-data", &[b as u64]);
        let full_draw = problem.prior.sample(&mut rng);
        let theta_b = &full_draw[..theta_dim];
        let delta = disc.sample_at(x, &mut rng)?;
        let eps = disc.sample_noise(x.len(), &mut rng);
        let mut y = problem.model.eval(x, theta_b);
        for (yi, (d, e)) in y.iter_mut().zip(delta.iter().zip(&eps)) {
            *yi += *d + *e;
        }
        let data_b = ExperimentData::new(x.to_vec(), y)?;
        let rep_problem = CalibrationProblem { data: &data_b, ..*problem };

        let mut per_w = Vec::with_capacity(cfg.w_grid.len());
        let mut ok = true;
        for &w in &cfg.w_grid {
            match replicate_intervals(&rep_problem, w, cfg, b as u64) {
                Ok(bounds) => per_w.push(coverage_indicator(theta_b, &bounds)),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            for (s, c) in sums.iter_mut().zip(&per_w) {
                *s += c;
            }
            successes += 1;
        }
    }
    assemble_curve(&cfg.w_grid, &sums, successes, cfg.b, cfg.alpha)
}

/// MAP-replicate parametric bootstrap: replicates are generated around the
/// observed-data fit η(x; θ̂), and coverage is the fraction of replicate
/// point estimates θ̂⁽ᵇ⁾ falling inside the single observed-data interval.
pub fn parametric_bootstrap_map_variant<S: Scalar>(
    problem: &CalibrationProblem<'_, S>,
    disc: &DiscrepancyPrior<S>,
    cfg: &BootstrapConfig<S>,
) -> Result<CoverageCurve<S>> {
    cfg.validate()?;
    let x = problem.data.x();
    let theta_dim = problem.theta_dim();

    let spec_one = problem.spec(S::one())?;
    let theta_hat = map_estimate(&spec_one, &MapConfig { restarts: 8, seed: cfg.seed })?;
    let base_pred = problem.model.eval(x, &theta_hat[..theta_dim]);

    // One observed-data interval per scale.
    let mut data_intervals = Vec::with_capacity(cfg.w_grid.len());
    for &w in &cfg.w_grid {
        data_intervals.push(replicate_intervals(problem, w, cfg, u64::MAX)?);
    }

    let mut sums = vec![0.0; cfg.w_grid.len()];
    let mut successes = 0usize;
    for b in 0..cfg.b {
        let mut rng = seed::stream(cfg.seed, "boot-map-data", &[b as u64]);
        let delta = disc.sample_at(x, &mut rng)?;
        let eps = disc.sample_noise(x.len(), &mut rng);
        let y: Vec<S> = base_pred
            .iter()
            .zip(delta.iter().zip(&eps))
            .map(|(&p, (&d, &e))| p + d + e)
            .collect();
        let data_b = ExperimentData::new(x.to_vec(), y)?;
        let rep_problem = CalibrationProblem { data: &data_b, ..*problem };
        let rep_spec = match rep_problem.spec(S::one()) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let map_cfg = MapConfig { restarts: 4, seed: seed::derive(cfg.seed, "boot-map", &[b as u64]) };
        match map_estimate(&rep_spec, &map_cfg) {
            Ok(theta_b) => {
                for (s, bounds) in sums.iter_mut().zip(&data_intervals) {
                    *s += coverage_indicator(&theta_b[..theta_dim], bounds);
                }
                successes += 1;
            }
            Err(_) => continue,
        }
    }
    assemble_curve(&cfg.w_grid, &sums, successes, cfg.b, cfg.alpha)
}

/// Nonparametric block bootstrap: residuals around the full-data fit are
/// cut into contiguous equal-x-width blocks, blocks are resampled with
/// replacement (internal order preserved) and reattached to the fitted
/// curve on the original grid, and coverage of the full-data estimate θ̂ by
/// replicate intervals is recorded.
pub fn nonparametric_block_bootstrap<S: Scalar>(
    problem: &CalibrationProblem<'_, S>,
    cfg: &BootstrapConfig<S>,
) -> Result<CoverageCurve<S>> {
    cfg.validate()?;
    let block_length = cfg.block_length.ok_or_else(|| {
        Error::Config("block bootstrap requires a block_length".into())
    })?;
    if !(block_length > S::zero()) {
        return Err(Error::Config("block_length must be positive".into()));
    }
    let x = problem.data.x();
    let n = x.len();
    let range = (x[n - 1] - x[0]).f64();
    let n_blocks = (range / block_length.f64() + 1e-9).floor() as usize;
    if n_blocks < 4 {
        return Err(Error::Config(format!(
            "block_length {} yields {} blocks over the x-range; need at least 4 \
             (coverage estimates degrade with few blocks)",
            block_length.f64(),
            n_blocks
        )));
    }

    // Full-data fit and residuals.
    let theta_dim = problem.theta_dim();
    let spec_one = problem.spec(S::one())?;
    let theta_hat = map_estimate(&spec_one, &MapConfig { restarts: 8, seed: cfg.seed })?;
    let pred = problem.model.eval(x, &theta_hat[..theta_dim]);
    let resid: Vec<S> =
        problem.data.y().iter().zip(&pred).map(|(&yi, &pi)| yi - pi).collect();

    // Block membership by x position.
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
    for (i, &xi) in x.iter().enumerate() {
        let k = (((xi - x[0]).f64() / block_length.f64()) as usize).min(n_blocks - 1);
        blocks[k].push(i);
    }
    if blocks.iter().any(Vec::is_empty) {
        return Err(Error::Config("a resampling block contains no data points".into()));
    }

    let mut sums = vec![0.0; cfg.w_grid.len()];
    let mut successes = 0usize;
    for b in 0..cfg.b {
        let mut rng = seed::stream(cfg.seed, "boot-block", &[b as u64]);
        let mut shuffled = Vec::with_capacity(n);
        while shuffled.len() < n {
            let k = rng.random_range(0..n_blocks);
            for &i in &blocks[k] {
                shuffled.push(resid[i]);
            }
        }
        shuffled.truncate(n);
        let y: Vec<S> = pred.iter().zip(&shuffled).map(|(&p, &r)| p + r).collect();
        let data_b = ExperimentData::new(x.to_vec(), y)?;
        let rep_problem = CalibrationProblem { data: &data_b, ..*problem };

        let mut per_w = Vec::with_capacity(cfg.w_grid.len());
        let mut ok = true;
        for &w in &cfg.w_grid {
            match replicate_intervals(&rep_problem, w, cfg, b as u64) {
                Ok(bounds) => {
                    per_w.push(coverage_indicator(&theta_hat[..theta_dim], &bounds))
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            for (s, c) in sums.iter_mut().zip(&per_w) {
                *s += c;
            }
            successes += 1;
        }
    }
    assemble_curve(&cfg.w_grid, &sums, successes, cfg.b, cfg.alpha)
}

// ---------------------------------------------------------------------------
// Deterministic interval approximation (the fast path for grid searches).

enum IntervalFamily {
    Gaussian,
    StudentT { nu: f64 },
}

/// Mode-plus-curvature credible intervals for the physical coordinates at
/// scale `w`, truncated to the prior support. When the loss has a latent
/// variance with an inverse-gamma prior, the variance is integrated out
/// analytically, giving a Student-t family with ν = w·n + 2·shape − 1;
/// otherwise the family is Gaussian.
pub fn laplace_intervals<S: Scalar>(
    problem: &CalibrationProblem<'_, S>,
    w: S,
    alpha: f64,
) -> Result<Vec<(S, S)>> {
    if !(w > S::zero()) {
        return Err(Error::Config("interval approximation requires w > 0".into()));
    }
    let theta_dim = problem.theta_dim();
    let x = problem.data.x();
    let y = problem.data.y();
    let n = x.len() as f64;
    let wf = w.f64();

    let theta_log_prior = |theta: &[S]| -> S {
        problem
            .prior
            .marginals()
            .iter()
            .take(theta_dim)
            .zip(theta)
            .map(|(m, &t)| m.log_density(t))
            .sum()
    };
    let ssr = |theta: &[S]| -> S {
        let pred = problem.model.eval(x, theta);
        sum_squared_residuals(y, &pred)
    };

    // Marginalized objective over θ and the matching interval family.
    let (family, objective): (IntervalFamily, Box<dyn Fn(&[S]) -> S>) = match problem.loss {
        LossFunction::L2 { quadrature } => (
            IntervalFamily::Gaussian,
            Box::new(move |theta: &[S]| {
                let pred = problem.model.eval(x, theta);
                w * crate::loss::l2_loss(x, y, &pred, quadrature) - theta_log_prior(theta)
            }),
        ),
        LossFunction::GaussianNll { variance: VarianceMode::Fixed(s2) } => (
            IntervalFamily::Gaussian,
            Box::new(move |theta: &[S]| {
                w * ssr(theta) / (S::of(2.0) * s2) - theta_log_prior(theta)
            }),
        ),
        LossFunction::GaussianNll { variance: VarianceMode::Latent } => {
            let (a, bscale) = match problem.prior.marginals()[problem.prior.dim() - 1] {
                Marginal::InverseGamma { shape, scale } => (shape.f64(), scale.f64()),
                _ => {
                    return Err(Error::Config(
                        "latent-variance interval approximation needs an inverse-gamma \
                         prior on the variance coordinate"
                            .into(),
                    ))
                }
            };
            let nu = wf * n + 2.0 * a - 1.0;
            if nu <= 0.05 {
                return Err(Error::Precision(format!(
                    "marginal posterior degrees of freedom {nu:.4} too small at w={wf}"
                )));
            }
            let big_a = S::of(wf * n / 2.0 + a);
            let bs = S::of(bscale);
            (
                IntervalFamily::StudentT { nu },
                Box::new(move |theta: &[S]| {
                    big_a * (bs + w * ssr(theta) / S::of(2.0)).ln() - theta_log_prior(theta)
                }),
            )
        }
    };

    // Mode search from deterministic starts inside the prior box.
    let bounds: Vec<(S, S)> = (0..theta_dim).map(|i| problem.prior.support(i)).collect();
    let starts: Vec<Vec<S>> = [0.5, 0.25, 0.75]
        .iter()
        .map(|&frac| {
            bounds
                .iter()
                .enumerate()
                .map(|(i, &(lo, hi))| {
                    if lo.is_finite() && hi.is_finite() {
                        lo + S::of(frac) * (hi - lo)
                    } else {
                        match problem.prior.marginals()[i] {
                            Marginal::Normal { mean, sd } => {
                                mean + S::of(2.0 * (frac - 0.5)) * sd
                            }
                            _ => S::of(2.0 * frac - 1.0),
                        }
                    }
                })
                .collect()
        })
        .collect();
    let opts = OptimOptions { max_iter: 200, f_tol: 1e-11, init_step: 0.1 };
    let mode = multistart_nelder_mead(&*objective, &starts, &bounds, &opts);
    if !mode.value.is_finite() {
        return Err(Error::Optimization("interval approximation found no finite mode".into()));
    }
    let theta_mode = mode.x;

    // Per-coordinate curvature: data part from the smooth residual surface,
    // prior part analytic (normal marginals only contribute).
    let ssr_hat = ssr(&theta_mode).f64();
    let mut out = Vec::with_capacity(theta_dim);
    for j in 0..theta_dim {
        let (lo, hi) = bounds[j];
        let width = if lo.is_finite() && hi.is_finite() {
            (hi - lo).f64()
        } else {
            theta_mode[j].f64().abs().max(1.0)
        };
        let h = S::of((width * 1e-4).max(1e-9));
        let prior_curv = match problem.prior.marginals()[j] {
            Marginal::Normal { sd, .. } => 1.0 / (sd.f64() * sd.f64()),
            _ => 0.0,
        };
        let (center, scale) = match family {
            IntervalFamily::Gaussian => {
                let data_curv = match problem.loss {
                    LossFunction::L2 { quadrature } => {
                        let lw = |t: &[S]| {
                            let pred = problem.model.eval(x, t);
                            crate::loss::l2_loss(x, y, &pred, quadrature)
                        };
                        wf * second_derivative(&lw, &theta_mode, j, h).f64()
                    }
                    LossFunction::GaussianNll { variance: VarianceMode::Fixed(s2) } => {
                        wf * second_derivative(&ssr, &theta_mode, j, h).f64()
                            / (2.0 * s2.f64())
                    }
                    LossFunction::GaussianNll { variance: VarianceMode::Latent } => {
                        unreachable!("latent variance uses the Student-t family")
                    }
                };
                let curv = data_curv + prior_curv;
                if !(curv > 0.0) || !curv.is_finite() {
                    return Err(Error::Precision(format!(
                        "non-positive curvature {curv} at the mode (coordinate {j})"
                    )));
                }
                (theta_mode[j].f64(), curv.sqrt().recip())
            }
            IntervalFamily::StudentT { nu } => {
                let a_shape = (nu + 1.0) / 2.0 - wf * n / 2.0;
                let bscale = match problem.prior.marginals()[problem.prior.dim() - 1] {
                    Marginal::InverseGamma { scale, .. } => scale.f64(),
                    _ => unreachable!("validated above"),
                };
                let big_a = wf * n / 2.0 + a_shape;
                let big_b = bscale + wf * ssr_hat / 2.0;
                let ssr_curv = second_derivative(&ssr, &theta_mode, j, h).f64();
                let curv = big_a * wf * ssr_curv / (2.0 * big_b) + prior_curv;
                if !(curv > 0.0) || !curv.is_finite() {
                    return Err(Error::Precision(format!(
                        "non-positive curvature {curv} at the mode (coordinate {j})"
                    )));
                }
                // Match the t density's curvature at its center:
                // scale² = (ν+1)/(ν·curvature).
                (theta_mode[j].f64(), ((nu + 1.0) / (nu * curv)).sqrt())
            }
        };
        let (qlo, qhi) = truncated_quantiles(
            center,
            scale,
            &family,
            lo.f64(),
            hi.f64(),
            alpha,
        )?;
        out.push((S::of(qlo), S::of(qhi)));
    }
    Ok(out)
}

/// Equal-tailed quantiles of a location-scale family truncated to [lo, hi].
fn truncated_quantiles(
    center: f64,
    scale: f64,
    family: &IntervalFamily,
    lo: f64,
    hi: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    use statrs::distribution::ContinuousCDF;
    let (cdf, inv): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match family {
        IntervalFamily::Gaussian => {
            let d = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
            (Box::new(move |z| d.cdf(z)), Box::new(move |p| d.inverse_cdf(p)))
        }
        IntervalFamily::StudentT { nu } => {
            let d = statrs::distribution::StudentsT::new(0.0, 1.0, *nu)
                .map_err(|e| Error::Precision(format!("t family setup failed: {e}")))?;
            (Box::new(move |z| d.cdf(z)), Box::new(move |p| d.inverse_cdf(p)))
        }
    };
    let plo = if lo.is_finite() { cdf((lo - center) / scale) } else { 0.0 };
    let phi = if hi.is_finite() { cdf((hi - center) / scale) } else { 1.0 };
    let mass = phi - plo;
    if !(mass > 1e-12) {
        return Err(Error::Precision(
            "posterior mass inside the prior support is numerically zero".into(),
        ));
    }
    let q = |p: f64| -> f64 {
        let z = inv((plo + p * mass).clamp(1e-15, 1.0 - 1e-15));
        (center + scale * z).clamp(
            if lo.is_finite() { lo } else { f64::NEG_INFINITY },
            if hi.is_finite() { hi } else { f64::INFINITY },
        )
    };
    Ok((q(alpha / 2.0), q(1.0 - alpha / 2.0)))
}

// ---------------------------------------------------------------------------
// Scale selection on a fitted coverage curve.

/// How the tuned scale is read off the coverage curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionPolicy {
    /// Weighted monotone spline in log-w; largest root of ĉ(w) = target.
    #[default]
    SplineRoot,
    /// Smallest grid scale whose raw estimate meets the target.
    SmallestAboveTarget,
}

/// Weighted isotonic regression (pool adjacent violators). `increasing`
/// selects the enforced direction.
fn weighted_pava(values: &[f64], weights: &[f64], increasing: bool) -> Vec<f64> {
    let n = values.len();
    let sign = if increasing { 1.0 } else { -1.0 };
    let mut level: Vec<f64> = values.iter().map(|v| sign * v).collect();
    let mut wsum: Vec<f64> = weights.to_vec();
    let mut count: Vec<usize> = vec![1; n];
    let mut m = 0usize;
    for i in 0..n {
        level[m] = sign * values[i];
        wsum[m] = weights[i];
        count[m] = 1;
        while m > 0 && level[m - 1] > level[m] {
            let merged_w = wsum[m - 1] + wsum[m];
            level[m - 1] = (level[m - 1] * wsum[m - 1] + level[m] * wsum[m]) / merged_w;
            wsum[m - 1] = merged_w;
            count[m - 1] += count[m];
            m -= 1;
        }
        m += 1;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..m {
        for _ in 0..count[i] {
            out.push(sign * level[i]);
        }
    }
    out
}

/// Monotone cubic interpolation slopes (Fritsch-Carlson limiter).
fn monotone_slopes(u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len();
    if n == 1 {
        return vec![0.0];
    }
    let d: Vec<f64> =
        (0..n - 1).map(|i| (v[i + 1] - v[i]) / (u[i + 1] - u[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 { 0.0 } else { (d[i - 1] + d[i]) / 2.0 };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = (a * a + b * b).sqrt();
            if s > 3.0 {
                m[i] = 3.0 * a / s * d[i];
                m[i + 1] = 3.0 * b / s * d[i];
            }
        }
    }
    m
}

fn hermite_eval(u: &[f64], v: &[f64], m: &[f64], seg: usize, x: f64) -> f64 {
    let h = u[seg + 1] - u[seg];
    let t = (x - u[seg]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * v[seg] + h10 * h * m[seg] + h01 * v[seg + 1] + h11 * h * m[seg + 1]
}

/// Picks ŵ from a coverage curve with the default spline-root policy.
pub fn select_loss_scale<S: Scalar>(curve: &CoverageCurve<S>, target: f64) -> Result<S> {
    select_loss_scale_with_policy(curve, target, SelectionPolicy::SplineRoot)
}

/// Picks ŵ so that estimated coverage meets `target` (typically 1−α).
///
/// The spline policy fits a weighted monotone cubic through the curve in
/// log-w (weights 1/SE, with the standard error floored by a pseudo-count
/// so exact 0/1 estimates keep finite weight) and bisects for the largest
/// root of ĉ(w) = target; when the fitted curve never crosses the target,
/// the grid point with estimate closest above the target is returned. The
/// result always lies inside the grid span.
pub fn select_loss_scale_with_policy<S: Scalar>(
    curve: &CoverageCurve<S>,
    target: f64,
    policy: SelectionPolicy,
) -> Result<S> {
    if curve.points.is_empty() {
        return Err(Error::Tuning("coverage curve has no points".into()));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!("coverage target {target} outside (0,1)")));
    }
    let cov: Vec<f64> = curve.points.iter().map(|p| p.coverage).collect();
    if cov.iter().all(|&c| c < target) {
        return Err(Error::Tuning(format!(
            "estimated coverage never reaches {target}; extend the scale grid toward \
             smaller w or increase B"
        )));
    }

    match policy {
        SelectionPolicy::SmallestAboveTarget => {
            for p in &curve.points {
                if p.coverage >= target {
                    return Ok(p.w);
                }
            }
            unreachable!("guarded by the all-below check");
        }
        SelectionPolicy::SplineRoot => {}
    }

    let n = cov.len();
    if n == 1 {
        return Ok(curve.points[0].w);
    }
    let u: Vec<f64> = curve.points.iter().map(|p| p.w.f64().ln()).collect();
    // Weight by inverse SE with a pseudo-count floor so that coverage
    // estimates of exactly 0 or 1 do not get infinite weight.
    let bf = curve.b as f64;
    let weights: Vec<f64> = cov
        .iter()
        .map(|&c| {
            let shrunk = (c * bf + 0.5) / (bf + 1.0);
            stats::binomial_se(shrunk, curve.b).recip()
        })
        .collect();
    let increasing = stats::spearman_rho(&u, &cov) > 0.0;
    let fit = weighted_pava(&cov, &weights, increasing);
    let slopes = monotone_slopes(&u, &fit);

    // Largest root: walk segments from the top of the grid.
    if fit[n - 1] >= target {
        return Ok(curve.points[n - 1].w);
    }
    for segment in (0..n - 1).rev() {
        let (f_lo, f_hi) = (fit[segment], fit[segment + 1]);
        let bracket = (f_lo - target) * (f_hi - target) <= 0.0;
        if !bracket {
            continue;
        }
        let ga = fit[segment] - target;
        let gb = fit[segment + 1] - target;
        // Exact hits on grid knots: the segment's root is that endpoint
        // (the right one is the larger root when both ends sit on target).
        if gb == 0.0 {
            return Ok(curve.points[segment + 1].w);
        }
        if ga == 0.0 {
            return Ok(curve.points[segment].w);
        }
        let mut a = u[segment];
        let mut b = u[segment + 1];
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            let fm = hermite_eval(&u, &fit, &slopes, segment, mid) - target;
            if fm == 0.0 || (b - a) < 1e-13 {
                return Ok(S::of(mid.exp()));
            }
            if (fm > 0.0) == (ga > 0.0) {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok(S::of((0.5 * (a + b)).exp()));
    }
    // Monotone fit never crossed: return the grid point closest above.
    let best = curve
        .points
        .iter()
        .filter(|p| p.coverage >= target)
        .min_by(|a, b| {
            (a.coverage - target)
                .partial_cmp(&(b.coverage - target))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("guarded by the all-below check");
    Ok(best.w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::SampleScalar;
    use crate::gp::DiscrepancyKind;
    use crate::loss::Quadrature;
    use crate::model::LinearModel;

    fn curve_from(points: &[(f64, f64)], b: usize, alpha: f64) -> CoverageCurve<f64> {
        CoverageCurve {
            points: points
                .iter()
                .map(|&(w, c)| CoveragePoint {
                    w,
                    coverage: c,
                    stderr: stats::binomial_se(c, b),
                })
                .collect(),
            b,
            alpha,
            failed: 0,
        }
    }

    #[test]
    fn config_validation() {
        let base = BootstrapConfig {
            b: 50,
            w_grid: vec![0.1f64, 1.0],
            alpha: 0.1,
            block_length: None,
            intervals: IntervalMethod::Laplace,
            seed: 0,
        };
        assert!(base.validate().is_ok());
        assert!(BootstrapConfig { b: 19, ..base.clone() }.validate().is_err());
        assert!(BootstrapConfig { w_grid: vec![], ..base.clone() }.validate().is_err());
        assert!(
            BootstrapConfig { w_grid: vec![1.0, 0.5], ..base.clone() }.validate().is_err()
        );
        assert!(
            BootstrapConfig { w_grid: vec![-1.0, 0.5], ..base.clone() }.validate().is_err()
        );
        assert!(BootstrapConfig { alpha: 1.0, ..base }.validate().is_err());
    }

    #[test]
    fn pava_enforces_direction() {
        let noisy = [0.99, 0.95, 0.97, 0.6, 0.65, 0.3];
        let w = [1.0; 6];
        let dec = weighted_pava(&noisy, &w, false);
        assert!(dec.windows(2).all(|p| p[0] >= p[1] - 1e-12), "{dec:?}");
        let inc = weighted_pava(&noisy, &w, true);
        assert!(inc.windows(2).all(|p| p[0] <= p[1] + 1e-12), "{inc:?}");
        // A high-weight point dominates its pooled neighbor.
        let v = [0.5, 0.9];
        let pooled = weighted_pava(&v, &[9.0, 1.0], false);
        assert!((pooled[0] - 0.54).abs() < 1e-12);
        assert_eq!(pooled[0], pooled[1]);
    }

    #[test]
    fn selection_examples() {
        // Flat curve exactly at target: returns the top of the grid.
        let flat = curve_from(&[(0.1, 0.9), (0.3, 0.9), (1.0, 0.9), (3.0, 0.9)], 100, 0.1);
        assert_eq!(select_loss_scale(&flat, 0.9).unwrap(), 3.0);

        // Linear-in-w synthetic curve c(w) = 1 − w/2: root at w = 0.2.
        let grid = [0.05, 0.1, 0.2, 0.4, 0.8];
        let pts: Vec<(f64, f64)> = grid.iter().map(|&w| (w, 1.0 - w / 2.0)).collect();
        let lin = curve_from(&pts, 200, 0.1);
        let w_hat = select_loss_scale(&lin, 0.9).unwrap();
        assert!((w_hat - 0.2).abs() < 1e-9, "root {w_hat}");

        // Root between grid points lands between them.
        let between = curve_from(&[(0.1, 0.97), (1.0, 0.93), (10.0, 0.5)], 200, 0.1);
        let w_bet = select_loss_scale(&between, 0.9).unwrap();
        assert!(w_bet > 1.0 && w_bet < 10.0, "{w_bet}");

        // Entirely below target: tuning error.
        let low = curve_from(&[(0.1, 0.5), (1.0, 0.4)], 100, 0.1);
        assert!(matches!(select_loss_scale(&low, 0.9), Err(Error::Tuning(_))));

        // Smallest-above-target policy reads the raw grid.
        let bumpy = curve_from(&[(0.1, 0.85), (0.3, 0.92), (1.0, 0.91), (3.0, 0.2)], 100, 0.1);
        let w_small =
            select_loss_scale_with_policy(&bumpy, 0.9, SelectionPolicy::SmallestAboveTarget)
                .unwrap();
        assert_eq!(w_small, 0.3);
    }

    #[test]
    fn selection_stays_inside_grid() {
        let mut rng = seed::stream(33, "sel-grid", &[]);
        use rand::Rng;
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (0..8)
                .map(|i| {
                    let w = 10f64.powf(-2.0 + 3.0 * i as f64 / 7.0);
                    (w, rng.random::<f64>())
                })
                .collect();
            let curve = curve_from(&pts, 100, 0.1);
            if let Ok(w) = select_loss_scale(&curve, 0.6) {
                assert!(w >= pts[0].0 - 1e-12 && w <= pts[7].0 + 1e-12);
            }
        }
    }

    #[test]
    fn largest_root_is_selected_when_curve_recrosses() {
        // Raw points dip below target then recover then fall: the monotone
        // fit smooths this, and the root must sit at the high-w crossing.
        let pts = [(0.01, 0.99), (0.1, 0.89), (0.5, 0.93), (2.0, 0.7), (8.0, 0.2)];
        let curve = curve_from(&pts, 100, 0.1);
        let w = select_loss_scale(&curve, 0.9).unwrap();
        assert!(w > 0.1, "expected the largest crossing, got {w}");
    }

    fn well_specified_problem(
        n: usize,
        tau: f64,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let mut rng = seed::stream(seed, "tuning-data", &[]);
        let y: Vec<f64> =
            x.iter().map(|&xi| 0.5 * xi + tau * f64::std_normal(&mut rng)).collect();
        (x, y)
    }

    #[test]
    fn well_specified_case_selects_scale_near_one() {
        // δ ≡ 0, correct Gaussian noise, fixed-variance Gaussian likelihood:
        // the selected scale should land within one grid step of 1 and the
        // smallest-w coverage should sit near 1−α.
        let tau = 0.1;
        let (x, y) = well_specified_problem(40, tau, 5);
        let data = ExperimentData::new(x.clone(), y).unwrap();
        let prior =
            ParameterPrior::new(vec![Marginal::Uniform { lo: -1.5, hi: 2.5 }]).unwrap();
        let model = LinearModel;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Fixed(tau * tau) };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let disc = DiscrepancyPrior::new(
            DiscrepancyKind::Gp {
                kernel: crate::gp::SqExpKernel::new(0.0, 1.0, 0.0).unwrap(),
                grid: x,
            },
            tau,
        )
        .unwrap();
        let w_grid: Vec<f64> =
            (0..9).map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / 8.0)).collect();
        let cfg = BootstrapConfig {
            b: 150,
            w_grid: w_grid.clone(),
            alpha: 0.1,
            block_length: None,
            intervals: IntervalMethod::Laplace,
            seed: 60,
        };
        let curve = parametric_bootstrap_coverage(&problem, &disc, &cfg).unwrap();
        assert_eq!(curve.failed, 0);

        // At w = 1 the likelihood is the true data law, so interval
        // coverage matches the nominal level up to binomial noise.
        let c1 = curve.points[4].coverage;
        assert!((w_grid[4] - 1.0).abs() < 1e-12);
        let se1 = stats::binomial_se(0.9, curve.b);
        assert!((c1 - 0.9).abs() <= 3.0 * se1, "unit-scale coverage {c1}");

        // Monotone non-increasing trend up to MC noise.
        let ws: Vec<f64> = curve.points.iter().map(|p| p.w).collect();
        let cs: Vec<f64> = curve.points.iter().map(|p| p.coverage).collect();
        assert!(stats::spearman_rho(&ws, &cs) <= 0.0, "coverage not decreasing: {cs:?}");

        let w_hat = select_loss_scale(&curve, 0.9).unwrap();
        // Within one grid step of 1 on the log grid.
        let step = (w_grid[1] / w_grid[0]).ln();
        assert!(
            (w_hat.ln()).abs() <= step + 1e-9,
            "selected {w_hat}, more than one grid step from 1"
        );
    }

    #[test]
    fn map_variant_degenerates_to_full_coverage_without_noise() {
        let (x, y) = well_specified_problem(25, 0.05, 6);
        let data = ExperimentData::new(x.clone(), y).unwrap();
        let prior =
            ParameterPrior::new(vec![Marginal::Uniform { lo: -1.5, hi: 2.5 }]).unwrap();
        let model = LinearModel;
        let loss = LossFunction::L2 { quadrature: Quadrature::PlainSum };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        // Zero discrepancy, zero noise: every replicate MAP equals θ̂.
        let disc = DiscrepancyPrior::new(
            DiscrepancyKind::Gp {
                kernel: crate::gp::SqExpKernel::new(0.0, 1.0, 0.0).unwrap(),
                grid: x,
            },
            0.0,
        )
        .unwrap();
        let cfg = BootstrapConfig {
            b: 25,
            w_grid: vec![0.5, 2.0, 8.0],
            alpha: 0.1,
            block_length: None,
            intervals: IntervalMethod::Laplace,
            seed: 61,
        };
        let curve = parametric_bootstrap_map_variant(&problem, &disc, &cfg).unwrap();
        for p in &curve.points {
            assert_eq!(p.coverage, 1.0, "degenerate replication must always cover");
        }
    }

    #[test]
    fn block_bootstrap_needs_enough_blocks() {
        let (x, y) = well_specified_problem(30, 0.1, 7);
        let data = ExperimentData::new(x, y).unwrap();
        let prior =
            ParameterPrior::new(vec![Marginal::Uniform { lo: -1.5, hi: 2.5 }]).unwrap();
        let model = LinearModel;
        let loss = LossFunction::L2 { quadrature: Quadrature::PlainSum };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let mut cfg = BootstrapConfig {
            b: 20,
            w_grid: vec![1.0],
            alpha: 0.1,
            block_length: Some(0.5),
            intervals: IntervalMethod::Laplace,
            seed: 62,
        };
        assert!(nonparametric_block_bootstrap(&problem, &cfg).is_err());
        cfg.block_length = None;
        assert!(nonparametric_block_bootstrap(&problem, &cfg).is_err());
        cfg.block_length = Some(0.2);
        assert!(nonparametric_block_bootstrap(&problem, &cfg).is_ok());
    }

    #[test]
    fn block_bootstrap_detects_unmodeled_autocorrelation() {
        // Smooth discrepancy + tiny blocks: replicate intervals are too
        // narrow around θ̂, so coverage at large w drops well below nominal.
        let n = 60;
        let x: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let kernel = crate::gp::SqExpKernel::new(0.05f64, 0.3, 1e-8).unwrap();
        let mut rng = seed::stream(8, "block-ar", &[]);
        let smooth = crate::gp::sample_gp(&kernel, &x, &mut rng).unwrap();
        let y: Vec<f64> = x
            .iter()
            .zip(&smooth)
            .map(|(&xi, &d)| 0.5 * xi + d + 0.01 * f64::std_normal(&mut rng))
            .collect();
        let data = ExperimentData::new(x, y).unwrap();
        let prior =
            ParameterPrior::new(vec![Marginal::Uniform { lo: -1.5, hi: 2.5 }]).unwrap();
        let model = LinearModel;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Fixed(1e-4) };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let cfg = BootstrapConfig {
            b: 60,
            w_grid: vec![1.0f64],
            alpha: 0.1,
            block_length: Some(0.05),
            intervals: IntervalMethod::Laplace,
            seed: 63,
        };
        let curve = nonparametric_block_bootstrap(&problem, &cfg).unwrap();
        assert!(
            curve.points[0].coverage < 0.8,
            "tiny blocks should be anti-conservative, got {}",
            curve.points[0].coverage
        );
    }

    #[test]
    fn coverage_curves_are_seed_deterministic_and_grid_stable() {
        let (x, y) = well_specified_problem(30, 0.1, 9);
        let data = ExperimentData::new(x.clone(), y).unwrap();
        let prior =
            ParameterPrior::new(vec![Marginal::Uniform { lo: -1.5, hi: 2.5 }]).unwrap();
        let model = LinearModel;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Fixed(0.01) };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let disc = DiscrepancyPrior::new(
            DiscrepancyKind::Gp {
                kernel: crate::gp::SqExpKernel::new(0.0, 1.0, 0.0).unwrap(),
                grid: x,
            },
            0.1,
        )
        .unwrap();
        let mk_cfg = |grid: Vec<f64>| BootstrapConfig {
            b: 30,
            w_grid: grid,
            alpha: 0.1,
            block_length: None,
            intervals: IntervalMethod::Laplace,
            seed: 64,
        };
        let a = parametric_bootstrap_coverage(&problem, &disc, &mk_cfg(vec![0.2, 1.0])).unwrap();
        let b = parametric_bootstrap_coverage(&problem, &disc, &mk_cfg(vec![0.2, 1.0])).unwrap();
        assert_eq!(a, b);
        // Refining the grid must not perturb existing points.
        let c =
            parametric_bootstrap_coverage(&problem, &disc, &mk_cfg(vec![0.2, 0.5, 1.0]))
                .unwrap();
        assert_eq!(a.points[0], c.points[0]);
        assert_eq!(a.points[1], c.points[2]);
    }

    #[test]
    fn laplace_matches_conjugate_gaussian_interval() {
        // Linear model, normal prior, fixed variance: the approximation is
        // exact, so compare against the closed-form posterior quantiles.
        let (x, y) = well_specified_problem(40, 0.1, 10);
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let data = ExperimentData::new(x, y).unwrap();
        let (m0, s0) = (0.2, 1.5);
        let prior = ParameterPrior::new(vec![Marginal::Normal { mean: m0, sd: s0 }]).unwrap();
        let model = LinearModel;
        let sigma2 = 0.01;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Fixed(sigma2) };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let w = 0.7;
        let got = laplace_intervals(&problem, w, 0.1).unwrap()[0];
        let prec = 1.0 / (s0 * s0) + w * sxx / sigma2;
        let mean = (m0 / (s0 * s0) + w * sxy / sigma2) / prec;
        let sd = prec.sqrt().recip();
        let z = 1.6448536269514722;
        assert!((got.0 - (mean - z * sd)).abs() < 1e-4, "lo {} vs {}", got.0, mean - z * sd);
        assert!((got.1 - (mean + z * sd)).abs() < 1e-4, "hi {} vs {}", got.1, mean + z * sd);
    }

    #[test]
    fn laplace_latent_variance_needs_inverse_gamma() {
        let (x, y) = well_specified_problem(30, 0.1, 11);
        let data = ExperimentData::new(x, y).unwrap();
        let prior = ParameterPrior::new(vec![
            Marginal::Uniform { lo: -1.0, hi: 2.0 },
            Marginal::Uniform { lo: 0.001, hi: 1.0 },
        ])
        .unwrap();
        let model = LinearModel;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Latent };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        assert!(laplace_intervals(&problem, 1.0, 0.1).is_err());
    }

    #[test]
    fn laplace_latent_matches_mcmc_on_linear_toy() {
        let (x, y) = well_specified_problem(50, 0.1, 12);
        let data = ExperimentData::new(x, y).unwrap();
        let prior = ParameterPrior::new(vec![
            Marginal::Uniform { lo: -1.0, hi: 2.0 },
            Marginal::InverseGamma { shape: 1.0, scale: 0.01 },
        ])
        .unwrap();
        let model = LinearModel;
        let loss = LossFunction::GaussianNll { variance: VarianceMode::Latent };
        let problem = CalibrationProblem::new(loss, &prior, &model, &data).unwrap();
        let w = 1.0;
        let fast = laplace_intervals(&problem, w, 0.1).unwrap()[0];
        let spec = problem.spec(w).unwrap();
        let cfg = SamplerConfig { n_iter: 20_000, n_burn: 4000, step_sizes: None, seed: 13 };
        let sample = sample_gibbs(&spec, &cfg).unwrap();
        let slow = interval_from_draws(&sample.column(0), 0.1);
        let width = slow.1 - slow.0;
        assert!(
            (fast.0 - slow.0).abs() < 0.35 * width && (fast.1 - slow.1).abs() < 0.35 * width,
            "fast {fast:?} vs MCMC {slow:?}"
        );
    }
}
