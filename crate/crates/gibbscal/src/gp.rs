//! Gaussian-process discrepancy modeling: squared-exponential kernels,
//! marginal-likelihood fitting, prior sampling, effective sample size of
//! autocorrelated residuals, and generalized least squares.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::ExperimentData;
use crate::error::{Error, Result};
use crate::model::ForwardModel;
use crate::num::Scalar;
use crate::optim::{multistart_nelder_mead, OptimOptions};

/// Squared-exponential covariance k(x, x′) = s²·exp(−(x−x′)²/(2ℓ²)) plus a
/// diagonal nugget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqExpKernel<S> {
    /// Marginal variance s².
    pub s2: S,
    /// Correlation length in units of x.
    pub length_scale: S,
    /// Nonnegative diagonal jitter, also usable as a noise variance.
    pub nugget: S,
}

impl<S: Scalar> SqExpKernel<S> {
    pub fn new(s2: S, length_scale: S, nugget: S) -> Result<Self> {
        if !(s2 >= S::zero() && s2.is_finite()) {
            return Err(Error::Config("kernel variance must be finite and >= 0".into()));
        }
        if !(length_scale > S::zero()) {
            return Err(Error::Config("kernel length scale must be > 0".into()));
        }
        if !(nugget >= S::zero()) {
            return Err(Error::Config("kernel nugget must be >= 0".into()));
        }
        Ok(Self { s2, length_scale, nugget })
    }

    pub fn correlation(&self, xi: S, xj: S) -> S {
        let d = (xi - xj) / self.length_scale;
        (-d * d / S::of(2.0)).exp()
    }

    /// Dense covariance matrix K(x, x) + nugget·I.
    pub fn covariance_matrix(&self, x: &[S]) -> DMatrix<S> {
        let n = x.len();
        DMatrix::from_fn(n, n, |i, j| {
            let mut v = self.s2 * self.correlation(x[i], x[j]);
            if i == j {
                v += self.nugget;
            }
            v
        })
    }
}

/// Cholesky factorization with jitter escalation: retries with diagonal
/// boosts of 1e-10, 1e-8, 1e-6 times s² (absolute when s² = 0) before
/// giving up with a conditioning error.
pub(crate) fn cholesky_escalated<S: Scalar>(
    kernel: &SqExpKernel<S>,
    x: &[S],
) -> Result<nalgebra::Cholesky<S, nalgebra::Dyn>> {
    let base = kernel.covariance_matrix(x);
    let scale = if kernel.s2 > S::zero() { kernel.s2 } else { S::one() };
    for jitter in [0.0, 1e-10, 1e-8, 1e-6] {
        let mut m = base.clone();
        if jitter > 0.0 {
            let add = scale * S::of(jitter);
            for i in 0..x.len() {
                m[(i, i)] += add;
            }
        }
        if let Some(chol) = nalgebra::Cholesky::new(m) {
            return Ok(chol);
        }
    }
    Err(Error::Conditioning(format!(
        "covariance matrix not positive definite after jitter escalation \
         (s2={}, length_scale={}, nugget={}, n={})",
        kernel.s2.f64(),
        kernel.length_scale.f64(),
        kernel.nugget.f64(),
        x.len()
    )))
}

/// Mean-zero Gaussian log marginal likelihood
/// −½δᵀK⁻¹δ − ½log|K| − (n/2)log 2π of residuals under the kernel.
pub fn gp_log_marginal<S: Scalar>(
    kernel: &SqExpKernel<S>,
    x: &[S],
    residuals: &[S],
) -> Result<S> {
    assert_eq!(x.len(), residuals.len(), "residual/input length mismatch");
    let chol = cholesky_escalated(kernel, x)?;
    let delta = DVector::from_column_slice(residuals);
    let alpha = chol.solve(&delta);
    let quad = delta.dot(&alpha);
    let logdet =
        chol.l_dirty().diagonal().iter().map(|&d| d.ln()).sum::<S>() * S::of(2.0);
    let n = S::of_usize(x.len());
    let two = S::of(2.0);
    Ok(-quad / two - logdet / two - n / two * (two * S::pi()).ln())
}

/// Residuals y(x) − η(x; θ̂) at the best-fitting parameter.
pub fn empirical_discrepancy<S: Scalar>(
    data: &ExperimentData<S>,
    model: &dyn ForwardModel<S>,
    theta_hat: &[S],
) -> Vec<S> {
    assert_eq!(theta_hat.len(), model.param_dim(), "parameter dimension mismatch");
    let pred = model.eval(data.x(), theta_hat);
    data.y().iter().zip(&pred).map(|(&yi, &pi)| yi - pi).collect()
}

/// Maximizes the mean-zero GP marginal likelihood over (s², ℓ, nugget) by
/// multistart simplex search on the log parameters. The supplied kernel is
/// one of the starts, so the fit never returns a worse optimum than it.
pub fn fit_gp_mle<S: Scalar>(
    residuals: &[S],
    x: &[S],
    init: &SqExpKernel<S>,
) -> Result<SqExpKernel<S>> {
    if residuals.len() != x.len() {
        return Err(Error::Dimension(format!(
            "{} residuals for {} inputs",
            residuals.len(),
            x.len()
        )));
    }
    if x.len() < 10 {
        return Err(Error::Data(format!(
            "need at least 10 residuals to fit a kernel, got {}",
            x.len()
        )));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Data("inputs must be strictly increasing".into()));
    }

    // Scale proxies for bounds: mean square of the (mean-zero-modeled)
    // residuals and the spacing structure of x.
    let n = x.len();
    let msq = residuals.iter().map(|&r| (r * r).f64()).sum::<f64>() / n as f64;
    let v = msq.max(1e-12);
    let range = (x[n - 1] - x[0]).f64();
    let min_dx = x
        .windows(2)
        .map(|w| (w[1] - w[0]).f64())
        .fold(f64::INFINITY, f64::min);

    let lb = [(1e-8 * v).ln(), (0.05 * min_dx).ln(), (1e-10 * v).ln()];
    let ub = [(1e4 * v).ln(), (100.0 * range).ln(), (10.0 * v).ln()];
    let bounds: Vec<(S, S)> = lb.iter().zip(&ub).map(|(&l, &u)| (S::of(l), S::of(u))).collect();
    let clamp3 = |p: [f64; 3]| -> Vec<S> {
        p.iter()
            .zip(lb.iter().zip(&ub))
            .map(|(&pi, (&l, &u))| S::of(pi.clamp(l, u)))
            .collect()
    };

    let mut starts: Vec<Vec<S>> = vec![clamp3([
        init.s2.f64().max(1e-300).ln(),
        init.length_scale.f64().ln(),
        init.nugget.f64().max(1e-300).ln(),
    ])];
    for ell in [range / 20.0, range / 5.0, range / 2.0] {
        for nug in [1e-6 * v, 0.3 * v] {
            starts.push(clamp3([v.ln(), ell.ln(), nug.ln()]));
        }
    }

    let objective = |logp: &[S]| -> S {
        let kernel = SqExpKernel {
            s2: logp[0].exp(),
            length_scale: logp[1].exp(),
            nugget: logp[2].exp(),
        };
        match gp_log_marginal(&kernel, x, residuals) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => S::of(f64::INFINITY),
        }
    };
    let opts = OptimOptions { max_iter: 150, f_tol: 1e-7, init_step: 0.15 };
    let best = multistart_nelder_mead(objective, &starts, &bounds, &opts);
    if !best.value.is_finite() {
        return Err(Error::Conditioning(
            "marginal likelihood non-finite at every kernel candidate".into(),
        ));
    }
    SqExpKernel::new(best.x[0].exp(), best.x[1].exp(), best.x[2].exp())
}

/// One mean-zero multivariate normal draw with covariance K(x, x). A zero
/// marginal variance yields the zero vector without factorization.
pub fn sample_gp<S: Scalar, R: Rng + ?Sized>(
    kernel: &SqExpKernel<S>,
    x: &[S],
    rng: &mut R,
) -> Result<Vec<S>> {
    if kernel.s2 == S::zero() {
        return Ok(vec![S::zero(); x.len()]);
    }
    let chol = cholesky_escalated(kernel, x)?;
    let z = DVector::from_fn(x.len(), |_, _| S::std_normal(rng));
    Ok((chol.l() * z).iter().copied().collect())
}

/// Effective sample size of a residual series:
/// n_e = n / (1 + 2·Σ_{k=1}^{K} ρ̂(k)) with the truncation lag K chosen by
/// the initial-positive-sequence rule (sum pairs of autocorrelations from
/// lag 1, stop at the first non-positive pair). Clamped to [1, n];
/// constant input returns 1.
pub fn effective_sample_size<S: Scalar>(residuals: &[S], x: &[S]) -> f64 {
    assert_eq!(residuals.len(), x.len(), "residual/input length mismatch");
    assert!(residuals.len() >= 10, "effective sample size needs n >= 10");
    let n = residuals.len();
    let r: Vec<f64> = residuals.iter().map(|v| v.f64()).collect();
    let mean = r.iter().sum::<f64>() / n as f64;
    let c0: f64 = r.iter().map(|v| (v - mean).powi(2)).sum();
    if c0 == 0.0 {
        return 1.0;
    }
    let rho = |k: usize| -> f64 {
        (0..n - k).map(|t| (r[t] - mean) * (r[t + k] - mean)).sum::<f64>() / c0
    };
    let mut acf_sum = 0.0;
    let mut m = 0usize;
    loop {
        let k1 = 2 * m + 1;
        let k2 = 2 * m + 2;
        if k2 >= n {
            break;
        }
        let pair = rho(k1) + rho(k2);
        if pair <= 0.0 {
            break;
        }
        acf_sum += pair;
        m += 1;
    }
    let n_e = n as f64 / (1.0 + 2.0 * acf_sum);
    n_e.clamp(1.0, n as f64)
}

/// Effective number of independent observations implied by a correlation
/// structure: n_e = n² / Σᵢⱼ Rᵢⱼ, where R is the correlation matrix of
/// observations with covariance s²·K + nugget·I. Used to convert a fitted
/// residual kernel into an equivalent independent sample count.
pub fn kernel_ess<S: Scalar>(kernel: &SqExpKernel<S>, x: &[S]) -> f64 {
    let n = x.len();
    let total_var = (kernel.s2 + kernel.nugget).f64();
    if total_var == 0.0 {
        return n as f64;
    }
    let s2 = kernel.s2.f64();
    let nug = kernel.nugget.f64();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut cov = s2 * kernel.correlation(x[i], x[j]).f64();
            if i == j {
                cov += nug;
            }
            sum += cov / total_var;
        }
    }
    ((n * n) as f64 / sum).clamp(1.0, n as f64)
}

/// Generalized least squares output.
#[derive(Debug, Clone)]
pub struct GlsFit<S: Scalar> {
    pub theta: Vec<S>,
    /// (XᵀK⁻¹X)⁻¹.
    pub covariance: DMatrix<S>,
    /// Normal-theory 95% confidence intervals per coefficient.
    pub ci95: Vec<(S, S)>,
    /// Kernel used for the final solve.
    pub kernel: SqExpKernel<S>,
}

/// GLS solve at a fixed kernel: θ̂ = (XᵀK⁻¹X)⁻¹XᵀK⁻¹y with coefficient
/// covariance (XᵀK⁻¹X)⁻¹. With K = σ²I this is exactly OLS for any σ².
pub fn gls_solve<S: Scalar>(
    x: &[S],
    y: &[S],
    design: &dyn Fn(S) -> Vec<S>,
    kernel: &SqExpKernel<S>,
) -> Result<(Vec<S>, DMatrix<S>)> {
    let n = x.len();
    let p = design(x[0]).len();
    let xmat = DMatrix::from_fn(n, p, |i, j| design(x[i])[j]);
    let yvec = DVector::from_column_slice(y);
    let chol = cholesky_escalated(kernel, x)?;
    let kinv_x = chol.solve(&xmat);
    let kinv_y = chol.solve(&yvec);
    let xtkx = xmat.transpose() * &kinv_x;
    let xtky = xmat.transpose() * &kinv_y;
    // Rounding can hand a numerically singular normal matrix a positive
    // pivot, so check conditioning explicitly before factorizing.
    let eig = xtkx.clone().symmetric_eigen();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v.f64());
        hi = hi.max(v.f64().abs());
    }
    if !(lo > 1e-10 * hi) {
        return Err(Error::Dimension(
            "design matrix is not full column rank under the kernel".into(),
        ));
    }
    let xtkx_chol = nalgebra::Cholesky::new(xtkx).ok_or_else(|| {
        Error::Dimension("design matrix is not full column rank under the kernel".into())
    })?;
    let theta = xtkx_chol.solve(&xtky);
    let cov = xtkx_chol.inverse();
    Ok((theta.iter().copied().collect(), cov))
}

/// GLS with profiled kernel: alternates coefficient solves and marginal-
/// likelihood kernel fits on the residuals (three rounds, starting from an
/// identity-covariance solve), then reports normal-theory 95% intervals.
pub fn gls_fit<S: Scalar>(
    data: &ExperimentData<S>,
    design: &dyn Fn(S) -> Vec<S>,
    init: &SqExpKernel<S>,
) -> Result<GlsFit<S>> {
    let x = data.x();
    let y = data.y();
    let identity = SqExpKernel { s2: S::zero(), length_scale: S::one(), nugget: S::one() };
    let (mut theta, mut cov) = gls_solve(x, y, design, &identity)?;
    let mut kernel = *init;
    for round in 0..3 {
        let resid: Vec<S> = (0..x.len())
            .map(|i| {
                let row = design(x[i]);
                let fit: S = row.iter().zip(&theta).map(|(&a, &b)| a * b).sum();
                y[i] - fit
            })
            .collect();
        let start = if round == 0 { *init } else { kernel };
        kernel = fit_gp_mle(&resid, x, &start)?;
        let solved = gls_solve(x, y, design, &kernel)?;
        theta = solved.0;
        cov = solved.1;
    }
    let z = S::of(statrs::distribution::ContinuousCDF::inverse_cdf(
        &statrs::distribution::Normal::new(0.0, 1.0).unwrap(),
        0.975,
    ));
    let ci95 = theta
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let se = cov[(j, j)].sqrt();
            (t - z * se, t + z * se)
        })
        .collect();
    Ok(GlsFit { theta, covariance: cov, ci95, kernel })
}

/// Prior over the model discrepancy δ plus the measurement-noise scale τ.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscrepancyKind<S: Scalar> {
    /// Mean-zero GP evaluated on a fixed grid.
    Gp { kernel: SqExpKernel<S>, grid: Vec<S> },
    /// Constant shift of random magnitude over a sub-interval of x, zero
    /// elsewhere; magnitude drawn once per replicate from Uniform(lo, hi).
    ShiftFamily { region: (S, S), magnitude: (S, S) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyPrior<S: Scalar> {
    pub kind: DiscrepancyKind<S>,
    /// Measurement noise standard deviation τ ≥ 0.
    pub noise_sd: S,
}

impl<S: Scalar> DiscrepancyPrior<S> {
    pub fn new(kind: DiscrepancyKind<S>, noise_sd: S) -> Result<Self> {
        if !(noise_sd >= S::zero()) {
            return Err(Error::Config("noise sd must be >= 0".into()));
        }
        match &kind {
            DiscrepancyKind::Gp { grid, .. } => {
                if grid.is_empty() {
                    return Err(Error::Config("GP discrepancy needs a nonempty grid".into()));
                }
            }
            DiscrepancyKind::ShiftFamily { region, magnitude } => {
                if !(region.0 < region.1) {
                    return Err(Error::Config("shift region needs lo < hi".into()));
                }
                if !(magnitude.0 < magnitude.1) {
                    return Err(Error::Config("shift magnitude law needs lo < hi".into()));
                }
            }
        }
        Ok(Self { kind, noise_sd })
    }

    /// One discrepancy draw aligned with `x`. For the GP variant, `x` must
    /// equal the stored grid.
    pub fn sample_at<S2: Rng + ?Sized>(&self, x: &[S], rng: &mut S2) -> Result<Vec<S>> {
        match &self.kind {
            DiscrepancyKind::Gp { kernel, grid } => {
                if grid.as_slice() != x {
                    return Err(Error::Dimension(
                        "GP discrepancy grid does not match the requested inputs".into(),
                    ));
                }
                sample_gp(kernel, x, rng)
            }
            DiscrepancyKind::ShiftFamily { region, magnitude } => {
                let mag = rng.random_range(magnitude.0..magnitude.1);
                Ok(x.iter()
                    .map(|&xi| {
                        if xi >= region.0 && xi <= region.1 {
                            mag
                        } else {
                            S::zero()
                        }
                    })
                    .collect())
            }
        }
    }

    /// i.i.d. N(0, τ²) noise draw of length n.
    pub fn sample_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<S> {
        (0..n).map(|_| self.noise_sd * S::std_normal(rng)).collect()
    }
}
