//! Tempered-posterior sampling: adaptive random-walk Metropolis for
//! densities of the form exp(−w·l(y,θ))·π(θ), plus credible intervals and
//! posterior-mode estimation.

use std::path::Path;

use rand::Rng;

use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::loss::LossFunction;
use crate::model::ForwardModel;
use crate::num::Scalar;
use crate::optim::{multistart_nelder_mead, OptimOptions};
use crate::prior::ParameterPrior;
use crate::seed;
use crate::stats;

/// Full specification of a tempered posterior over the parameter vector.
///
/// When the loss carries a latent variance, the prior must supply one extra
/// trailing marginal for σ² (so `prior.dim() = model.param_dim() + 1`); the
/// sampler explores that coordinate on the log scale to respect positivity.
pub struct GibbsPosteriorSpec<'a, S: Scalar> {
    loss: LossFunction<S>,
    prior: &'a ParameterPrior<S>,
    model: &'a dyn ForwardModel<S>,
    data: &'a ExperimentData<S>,
    w: S,
}

impl<'a, S: Scalar> GibbsPosteriorSpec<'a, S> {
    pub fn new(
        loss: LossFunction<S>,
        prior: &'a ParameterPrior<S>,
        model: &'a dyn ForwardModel<S>,
        data: &'a ExperimentData<S>,
        w: S,
    ) -> Result<Self> {
        if !(w >= S::zero()) || !w.is_finite() {
            return Err(Error::Config(format!(
                "loss scale must be finite and nonnegative, got {}",
                w.f64()
            )));
        }
        let want = model.param_dim() + loss.latent_dim();
        if prior.dim() != want {
            return Err(Error::Dimension(format!(
                "prior has {} marginals but model ({}) plus latent variance ({}) needs {}",
                prior.dim(),
                model.param_dim(),
                loss.latent_dim(),
                want
            )));
        }
        Ok(Self { loss, prior, model, data, w })
    }

    pub fn w(&self) -> S {
        self.w
    }

    pub fn prior(&self) -> &ParameterPrior<S> {
        self.prior
    }

    /// Total sampled dimension (θ plus any latent variance coordinate).
    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn theta_dim(&self) -> usize {
        self.model.param_dim()
    }

    fn has_latent(&self) -> bool {
        self.loss.latent_dim() == 1
    }

    /// Converts the internal sampling state (latent coordinate on log
    /// scale) to the natural parameterization.
    fn to_natural(&self, state: &[S]) -> Vec<S> {
        let mut nat = state.to_vec();
        if self.has_latent() {
            let last = nat.len() - 1;
            nat[last] = nat[last].exp();
        }
        nat
    }

    fn to_state(&self, natural: &[S]) -> Vec<S> {
        let mut st = natural.to_vec();
        if self.has_latent() {
            let last = st.len() - 1;
            st[last] = st[last].ln();
        }
        st
    }

    /// Unnormalized log target in the natural parameterization:
    /// −w·l(y, θ) + log π(θ). At w = 0 the loss is never evaluated.
    pub fn log_target_natural(&self, natural: &[S]) -> S {
        let lp = self.prior.log_density(natural);
        if !lp.is_finite() {
            return S::of(f64::NEG_INFINITY);
        }
        if self.w == S::zero() {
            return lp;
        }
        let theta = &natural[..self.theta_dim()];
        let pred = self.model.eval(self.data.x(), theta);
        let sigma2 = if self.has_latent() { Some(natural[natural.len() - 1]) } else { None };
        let l = self.loss.evaluate(self.data.x(), self.data.y(), &pred, sigma2);
        if !l.is_finite() {
            return S::of(f64::NEG_INFINITY);
        }
        lp - self.w * l
    }

    /// Log target in the sampling parameterization, including the log-scale
    /// Jacobian for the latent variance coordinate.
    fn log_target_state(&self, state: &[S]) -> S {
        let nat = self.to_natural(state);
        let mut lt = self.log_target_natural(&nat);
        if self.has_latent() && lt.is_finite() {
            // d σ²/d u = e^u contributes +u to the log density.
            lt += state[state.len() - 1];
        }
        lt
    }

    fn state_bounds(&self) -> Vec<(S, S)> {
        let inf = S::of(f64::INFINITY);
        (0..self.dim())
            .map(|i| {
                if self.has_latent() && i == self.dim() - 1 {
                    (-inf, inf)
                } else {
                    self.prior.support(i)
                }
            })
            .collect()
    }
}

/// MCMC run length and proposal configuration.
#[derive(Debug, Clone)]
pub struct SamplerConfig<S> {
    /// Total iterations, burn-in included.
    pub n_iter: usize,
    pub n_burn: usize,
    /// Initial proposal standard deviation per coordinate; derived from the
    /// prior spread when absent.
    pub step_sizes: Option<Vec<S>>,
    pub seed: u64,
}

impl<S> Default for SamplerConfig<S> {
    fn default() -> Self {
        Self { n_iter: 4000, n_burn: 1000, step_sizes: None, seed: 0 }
    }
}

/// Kept draws plus chain diagnostics.
#[derive(Debug, Clone)]
pub struct PosteriorSample<S> {
    /// One kept draw per row, natural parameterization.
    pub draws: Vec<Vec<S>>,
    pub param_names: Vec<String>,
    /// Post-burn-in fraction of accepted coordinate proposals.
    pub acceptance_rate: f64,
    pub w: S,
    pub rng_seed: u64,
    pub n_iter: usize,
    pub n_burn: usize,
}

impl<S: Scalar> PosteriorSample<S> {
    pub fn n_kept(&self) -> usize {
        self.draws.len()
    }

    pub fn dim(&self) -> usize {
        self.param_names.len()
    }

    /// Copies out one coordinate of the chain.
    pub fn column(&self, j: usize) -> Vec<S> {
        self.draws.iter().map(|d| d[j]).collect()
    }

    /// Projection onto the first `dim` coordinates, dropping latent ones
    /// (such as a sampled noise variance) before summarization.
    pub fn retain_leading(&self, dim: usize) -> PosteriorSample<S> {
        assert!(dim >= 1 && dim <= self.dim(), "projection dimension out of range");
        PosteriorSample {
            draws: self.draws.iter().map(|d| d[..dim].to_vec()).collect(),
            param_names: self.param_names[..dim].to_vec(),
            acceptance_rate: self.acceptance_rate,
            w: self.w,
            rng_seed: self.rng_seed,
            n_iter: self.n_iter,
            n_burn: self.n_burn,
        }
    }

    /// One draw per row, header = parameter names.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(&self.param_names)?;
        for d in &self.draws {
            wtr.write_record(d.iter().map(|v| format!("{}", v.f64())))?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Sidecar with the run metadata needed to regenerate the chain.
    pub fn write_sidecar_json(&self, path: &Path) -> Result<()> {
        let side = serde_json::json!({
            "w": self.w.f64(),
            "seed": self.rng_seed,
            "acceptance_rate": self.acceptance_rate,
            "n_iter": self.n_iter,
            "n_burn": self.n_burn,
        });
        std::fs::write(path, serde_json::to_string_pretty(&side)? + "\n")?;
        Ok(())
    }
}

fn default_step<S: Scalar>(prior: &ParameterPrior<S>, i: usize, is_latent: bool) -> S {
    use crate::prior::Marginal;
    if is_latent {
        // Latent coordinate moves on the log scale.
        return S::of(0.5);
    }
    match prior.marginals()[i] {
        Marginal::Uniform { lo, hi } => S::of(0.25) * (hi - lo),
        Marginal::Normal { sd, .. } => S::of(0.5) * sd,
        Marginal::InverseGamma { shape, scale } => {
            S::of(0.5) * scale / (shape + S::one())
        }
    }
}

fn parameter_names(theta_dim: usize, has_latent: bool) -> Vec<String> {
    let mut names: Vec<String> = (0..theta_dim).map(|i| format!("theta_{i}")).collect();
    if has_latent {
        names.push("sigma2".into());
    }
    names
}

/// Draws from the tempered posterior by coordinate-at-a-time random-walk
/// Metropolis. Step sizes adapt toward 0.3 acceptance during burn-in only;
/// the post-burn-in kernel is fixed, so kept draws target the exact density.
pub fn sample_gibbs<S: Scalar>(
    spec: &GibbsPosteriorSpec<'_, S>,
    config: &SamplerConfig<S>,
) -> Result<PosteriorSample<S>> {
    if config.n_iter <= config.n_burn {
        return Err(Error::Config(format!(
            "n_iter ({}) must exceed n_burn ({})",
            config.n_iter, config.n_burn
        )));
    }
    let dim = spec.dim();
    let mut steps: Vec<S> = match &config.step_sizes {
        Some(s) => {
            if s.len() != dim {
                return Err(Error::Dimension(format!(
                    "{} step sizes supplied for {dim} coordinates",
                    s.len()
                )));
            }
            if s.iter().any(|&v| !(v > S::zero())) {
                return Err(Error::Config("step sizes must be positive".into()));
            }
            s.clone()
        }
        None => (0..dim)
            .map(|i| default_step(spec.prior, i, spec.has_latent() && i == dim - 1))
            .collect(),
    };

    let mut rng = seed::stream(config.seed, "gibbs-rwm", &[]);

    // Initialize at the posterior mode when one is findable, otherwise at
    // the best of 100 prior draws. At w = 0 a prior draw is already exact.
    let mut state: Vec<S> = if spec.w == S::zero() {
        spec.to_state(&spec.prior.sample(&mut rng))
    } else {
        match map_search(spec, 5, &mut rng) {
            Some(natural) => spec.to_state(&natural),
            None => {
                let mut best: Option<(Vec<S>, S)> = None;
                for _ in 0..100 {
                    let cand = spec.to_state(&spec.prior.sample(&mut rng));
                    let lt = spec.log_target_state(&cand);
                    if lt.is_finite() && best.as_ref().map_or(true, |(_, b)| lt > *b) {
                        best = Some((cand, lt));
                    }
                }
                best.ok_or_else(|| {
                    Error::Initialization(
                        "loss was non-finite at all 100 prior-draw initializations".into(),
                    )
                })?
                .0
            }
        }
    };
    let mut log_cur = spec.log_target_state(&state);
    if !log_cur.is_finite() {
        return Err(Error::Initialization("initial state has non-finite target".into()));
    }

    const ADAPT_BLOCK: usize = 50;
    let mut block_acc = vec![0usize; dim];
    let mut block_count = 0usize;
    let mut kept_acc = 0usize;
    let n_kept = config.n_iter - config.n_burn;
    let mut draws = Vec::with_capacity(n_kept);

    for it in 0..config.n_iter {
        let burning = it < config.n_burn;
        for i in 0..dim {
            let old = state[i];
            state[i] = old + steps[i] * S::std_normal(&mut rng);
            let log_prop = spec.log_target_state(&state);
            let log_u = S::of(rng.random::<f64>().ln());
            if log_prop.is_finite() && log_u < log_prop - log_cur {
                log_cur = log_prop;
                if burning {
                    block_acc[i] += 1;
                } else {
                    kept_acc += 1;
                }
            } else {
                state[i] = old;
            }
        }
        if burning {
            block_count += 1;
            if block_count == ADAPT_BLOCK {
                for (s, acc) in steps.iter_mut().zip(&mut block_acc) {
                    let rate = *acc as f64 / ADAPT_BLOCK as f64;
                    let factor = (rate - 0.3).exp().clamp(0.5, 2.0);
                    *s *= S::of(factor);
                    *acc = 0;
                }
                block_count = 0;
            }
        } else {
            draws.push(spec.to_natural(&state));
        }
    }

    Ok(PosteriorSample {
        draws,
        param_names: parameter_names(spec.theta_dim(), spec.has_latent()),
        acceptance_rate: kept_acc as f64 / (n_kept * dim) as f64,
        w: spec.w,
        rng_seed: config.seed,
        n_iter: config.n_iter,
        n_burn: config.n_burn,
    })
}

/// Internal mode search used for chain initialization; `None` when no
/// finite optimum was found.
fn map_search<S: Scalar, R: Rng + ?Sized>(
    spec: &GibbsPosteriorSpec<'_, S>,
    restarts: usize,
    rng: &mut R,
) -> Option<Vec<S>> {
    let bounds = spec.state_bounds();
    let starts: Vec<Vec<S>> =
        (0..restarts).map(|_| spec.to_state(&spec.prior.sample(rng))).collect();
    let obj = |state: &[S]| -> S {
        let nat = spec.to_natural(state);
        -spec.log_target_natural(&nat)
    };
    let opts = OptimOptions { max_iter: 500, f_tol: 1e-12, init_step: 0.1 };
    let r = multistart_nelder_mead(obj, &starts, &bounds, &opts);
    if r.value.is_finite() {
        Some(spec.to_natural(&r.x))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MapConfig {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { restarts: 8, seed: 0 }
    }
}

/// Posterior mode: multistart simplex minimization of w·l(y,θ) − log π(θ).
/// With a flat prior this is the plain loss minimizer used to form the
/// empirical discrepancy.
pub fn map_estimate<S: Scalar>(
    spec: &GibbsPosteriorSpec<'_, S>,
    config: &MapConfig,
) -> Result<Vec<S>> {
    let mut rng = seed::stream(config.seed, "map-estimate", &[]);
    map_search(spec, config.restarts.max(1), &mut rng).ok_or_else(|| {
        Error::Optimization(format!(
            "no restart of {} found a finite posterior mode",
            config.restarts.max(1)
        ))
    })
}

/// Per-coordinate equal-tailed interval at level 1−α.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleInterval<S> {
    pub alpha: f64,
    /// (lo, hi) per coordinate.
    pub bounds: Vec<(S, S)>,
}

/// Equal-tailed α/2 and 1−α/2 empirical quantiles (linear interpolation)
/// of each chain coordinate. Requires at least 100 kept draws.
pub fn credible_interval<S: Scalar>(
    sample: &PosteriorSample<S>,
    alpha: f64,
) -> Result<CredibleInterval<S>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("interval level alpha={alpha} outside (0,1)")));
    }
    if sample.n_kept() < 100 {
        return Err(Error::Precision(format!(
            "{} kept draws are too few for quantile intervals (need 100)",
            sample.n_kept()
        )));
    }
    let bounds = (0..sample.dim())
        .map(|j| interval_from_draws(&sample.column(j), alpha))
        .collect();
    Ok(CredibleInterval { alpha, bounds })
}

/// Equal-tailed interval of a raw draw vector (no minimum-size check);
/// shared by the bootstrap tuning loop.
pub fn interval_from_draws<S: Scalar>(draws: &[S], alpha: f64) -> (S, S) {
    let mut v = draws.to_vec();
    stats::sort_scalars(&mut v);
    (
        stats::quantile_type7_sorted(&v, alpha / 2.0),
        stats::quantile_type7_sorted(&v, 1.0 - alpha / 2.0),
    )
}
