//! Consensus fusion of independently calibrated posteriors.
//!
//! Each subset posterior is summarized as a Gaussian; the consensus
//! covariance is the Wasserstein barycenter of the subset covariances
//! (computed by a fixed-point iteration that is exact within the Gaussian
//! family) and the consensus mean is the normalized inverse-covariance
//! weighted average of the subset means.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::sampler::PosteriorSample;
use crate::stats;

/// How the consensus accounts for the number of subsets K.
///
/// `WithinExperiment` treats the subsets as shards of one experiment: the
/// recommended recipe raises each subset loss scale by the factor K before
/// sampling (see [`subset_scale_multiplier`]) and leaves the fused
/// covariance alone. `AcrossExperiments` treats them as genuine replicate
/// experiments and divides the fused covariance by K afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingPolicy {
    WithinExperiment,
    AcrossExperiments,
}

/// Loss-scale multiplier each subset should apply before sampling under
/// the given policy.
pub fn subset_scale_multiplier(policy: ScalingPolicy, k: usize) -> f64 {
    match policy {
        ScalingPolicy::WithinExperiment => k as f64,
        ScalingPolicy::AcrossExperiments => 1.0,
    }
}

/// Gaussian moment summary of one subset posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary<S: Scalar> {
    pub id: String,
    pub n_draws: usize,
    pub mean: DVector<S>,
    pub cov: DMatrix<S>,
}

fn check_symmetric<S: Scalar>(m: &DMatrix<S>, what: &str) -> Result<()> {
    let scale = m.iter().fold(1.0f64, |a, &v| a.max(v.f64().abs()));
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).f64().abs() > 1e-10 * scale {
                return Err(Error::Conditioning(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

fn min_max_eigenvalues<S: Scalar>(m: &DMatrix<S>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v.f64());
        hi = hi.max(v.f64());
    }
    (lo, hi)
}

impl<S: Scalar> GaussianSummary<S> {
    pub fn new(
        id: impl Into<String>,
        n_draws: usize,
        mean: DVector<S>,
        cov: DMatrix<S>,
    ) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() != mean.len() || mean.is_empty() {
            return Err(Error::Dimension(format!(
                "summary mean has dim {} but covariance is {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        check_symmetric(&cov, "summary covariance")?;
        let (lo, _) = min_max_eigenvalues(&cov);
        if !(lo > 0.0) {
            return Err(Error::Conditioning(format!(
                "summary covariance has a non-positive eigenvalue ({lo:.3e})"
            )));
        }
        Ok(Self { id: id.into(), n_draws, mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "n_draws": self.n_draws,
            "mean": self.mean.iter().map(|v| v.f64()).collect::<Vec<_>>(),
            "cov": matrix_rows(&self.cov),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Repr {
            id: String,
            n_draws: usize,
            mean: Vec<f64>,
            cov: Vec<Vec<f64>>,
        }
        let repr: Repr = serde_json::from_value(value.clone())?;
        let d = repr.mean.len();
        if repr.cov.len() != d || repr.cov.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("summary covariance rows have mixed lengths".into()));
        }
        let mean = DVector::from_iterator(d, repr.mean.iter().map(|&v| S::of(v)));
        let cov = DMatrix::from_fn(d, d, |i, j| S::of(repr.cov[i][j]));
        Self::new(repr.id, repr.n_draws, mean, cov)
    }
}

fn matrix_rows<S: Scalar>(m: &DMatrix<S>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].f64()).collect())
        .collect()
}

/// Fused posterior over the shared parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusPosterior<S: Scalar> {
    pub mean: DVector<S>,
    pub cov: DMatrix<S>,
    pub scaling: ScalingPolicy,
    pub iterations_used: usize,
    pub converged: bool,
}

impl<S: Scalar> ConsensusPosterior<S> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean": self.mean.iter().map(|v| v.f64()).collect::<Vec<_>>(),
            "cov": matrix_rows(&self.cov),
            "scaling": self.scaling,
            "iterations_used": self.iterations_used,
            "converged": self.converged,
        })
    }
}

/// Symmetric-eigendecomposition matrix power with an eigenvalue floor that
/// guards against rounding-induced tiny negatives.
fn spd_power<S: Scalar>(m: &DMatrix<S>, exponent: f64) -> Result<DMatrix<S>> {
    let eig = m.clone().symmetric_eigen();
    let floor = S::of(1e-12);
    let mut scaled: Vec<S> = Vec::with_capacity(eig.eigenvalues.len());
    for &v in eig.eigenvalues.iter() {
        if v.f64() < -1e-8 {
            return Err(Error::Conditioning(format!(
                "matrix power of a non-positive-definite matrix (eigenvalue {:.3e})",
                v.f64()
            )));
        }
        let clamped = if v > floor { v } else { floor };
        scaled.push(S::of(clamped.f64().powf(exponent)));
    }
    let v = &eig.eigenvectors;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 0..scaled.len() {
        let col = v.column(k);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] += scaled[k] * col[i] * col[j];
            }
        }
    }
    Ok(out)
}

fn symmetrize<S: Scalar>(m: &mut DMatrix<S>) {
    let half = S::of(0.5);
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult<S: Scalar> {
    pub cov: DMatrix<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// One step of the barycenter fixed-point map
/// S ← S^{−1/2} ( (1/K) Σ_k (S^{1/2} Σ_k S^{1/2})^{1/2} )² S^{−1/2}.
fn barycenter_step<S: Scalar>(s: &DMatrix<S>, covs: &[DMatrix<S>]) -> Result<DMatrix<S>> {
    let root = spd_power(s, 0.5)?;
    let inv_root = spd_power(s, -0.5)?;
    let k_inv = S::of(1.0 / covs.len() as f64);
    let mut mean_root = DMatrix::zeros(s.nrows(), s.ncols());
    for cov in covs {
        let inner = &root * cov * &root;
        mean_root += spd_power(&inner, 0.5)? * k_inv;
    }
    let mut next = &inv_root * &mean_root * &mean_root * &inv_root;
    symmetrize(&mut next);
    Ok(next)
}

/// Wasserstein-barycenter covariance of a set of Gaussian covariances, by
/// fixed-point iteration from the identity matrix. Stops when consecutive
/// iterates differ by less than `tol` in Frobenius norm; returns the last
/// iterate with `converged = false` if `max_iter` is exhausted.
pub fn barycenter_covariance<S: Scalar>(
    covs: &[DMatrix<S>],
    tol: f64,
    max_iter: usize,
) -> Result<BarycenterResult<S>> {
    if covs.is_empty() {
        return Err(Error::Config("barycenter needs at least one covariance".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("barycenter tolerance must be > 0".into()));
    }
    let d = covs[0].nrows();
    for cov in covs {
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Dimension("covariances have mixed dimensions".into()));
        }
        check_symmetric(cov, "covariance")?;
        let (lo, _) = min_max_eigenvalues(cov);
        if lo < 1e-12 {
            return Err(Error::Conditioning(format!(
                "covariance eigenvalue {lo:.3e} below 1e-12"
            )));
        }
    }
    let mut s = DMatrix::<S>::identity(d, d);
    for iter in 1..=max_iter {
        let next = barycenter_step(&s, covs)?;
        let diff = (&next - &s).norm().f64();
        s = next;
        if diff < tol {
            return Ok(BarycenterResult { cov: s, iterations: iter, converged: true });
        }
    }
    Ok(BarycenterResult { cov: s, iterations: max_iter, converged: false })
}

/// Normalized inverse-covariance weighted average of the subset means:
/// μ̄ = (Σ_k Σ_k⁻¹)⁻¹ Σ_k Σ_k⁻¹ μ_k.
pub fn consensus_mean<S: Scalar>(summaries: &[GaussianSummary<S>]) -> Result<DVector<S>> {
    if summaries.is_empty() {
        return Err(Error::Config("consensus mean needs at least one summary".into()));
    }
    let d = summaries[0].dim();
    if summaries.iter().any(|s| s.dim() != d) {
        return Err(Error::Dimension("summaries have mixed dimensions".into()));
    }
    let mut precision_sum = DMatrix::<S>::zeros(d, d);
    let mut weighted = DVector::<S>::zeros(d);
    for s in summaries {
        let chol = nalgebra::Cholesky::new(s.cov.clone()).ok_or_else(|| {
            Error::Conditioning(format!("summary `{}` covariance is not invertible", s.id))
        })?;
        let prec = chol.inverse();
        weighted += &prec * &s.mean;
        precision_sum += prec;
    }
    let chol = nalgebra::Cholesky::new(precision_sum).ok_or_else(|| {
        Error::Conditioning("precision sum is singular; consensus mean undefined".into())
    })?;
    Ok(chol.solve(&weighted))
}

/// Fuses subset posteriors into one consensus posterior.
///
/// Summaries are processed in a canonical order (sorted by subset id), so
/// the result is exactly invariant to the argument order.
pub fn combine<S: Scalar>(
    summaries: &[GaussianSummary<S>],
    scaling: ScalingPolicy,
    tol: f64,
    max_iter: usize,
) -> Result<ConsensusPosterior<S>> {
    if summaries.is_empty() {
        return Err(Error::Config("combine needs at least one summary".into()));
    }
    let mut ordered: Vec<&GaussianSummary<S>> = summaries.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let sorted: Vec<GaussianSummary<S>> = ordered.into_iter().cloned().collect();

    let covs: Vec<DMatrix<S>> = sorted.iter().map(|s| s.cov.clone()).collect();
    let bary = barycenter_covariance(&covs, tol, max_iter)?;
    let mean = consensus_mean(&sorted)?;
    let mut cov = bary.cov;
    if scaling == ScalingPolicy::AcrossExperiments {
        cov /= S::of_usize(summaries.len());
    }
    Ok(ConsensusPosterior {
        mean,
        cov,
        scaling,
        iterations_used: bary.iterations,
        converged: bary.converged,
    })
}

/// Moment summary of an MCMC sample (unbiased covariance). Logs a warning
/// when any marginal skewness exceeds 1 in absolute value, since heavily
/// skewed posteriors strain the Gaussian-family fusion.
pub fn gaussianize<S: Scalar>(
    sample: &PosteriorSample<S>,
    id: impl Into<String>,
) -> Result<GaussianSummary<S>> {
    let n = sample.draws.len();
    if n < 100 {
        return Err(Error::Precision(format!(
            "moment summary needs at least 100 draws, got {n}"
        )));
    }
    let id = id.into();
    let d = sample.draws[0].len();
    let nf = S::of_usize(n);
    let mut mean = DVector::<S>::zeros(d);
    for draw in &sample.draws {
        for j in 0..d {
            mean[j] += draw[j];
        }
    }
    mean /= nf;
    let mut cov = DMatrix::<S>::zeros(d, d);
    for draw in &sample.draws {
        for i in 0..d {
            let di = draw[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (draw[j] - mean[j]);
            }
        }
    }
    let denom = S::of_usize(n - 1);
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let (lo, hi) = min_max_eigenvalues(&cov);
    if !(lo > 1e-12 * hi.max(1e-300)) || !(lo > 0.0) {
        return Err(Error::Conditioning(format!(
            "sample covariance for `{id}` is rank deficient (min eigenvalue {lo:.3e})"
        )));
    }
    for j in 0..d {
        let col = sample.column(j);
        let skew = stats::skewness(&col).f64();
        if skew.abs() > 1.0 {
            log::warn!(
                "marginal {} of `{}` has skewness {:.2}; Gaussian summary may be poor",
                sample.param_names.get(j).map(String::as_str).unwrap_or("?"),
                id,
                skew
            );
        }
    }
    GaussianSummary::new(id, n, mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::SampleScalar;
    use crate::seed;
    use rand::Rng;

    fn mat<S: Scalar>(rows: &[&[f64]]) -> DMatrix<S> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| S::of(rows[i][j]))
    }

    fn vec1<S: Scalar>(vals: &[f64]) -> DVector<S> {
        DVector::from_iterator(vals.len(), vals.iter().map(|&v| S::of(v)))
    }

    fn summary(id: &str, mean: &[f64], cov: &[&[f64]]) -> GaussianSummary<f64> {
        GaussianSummary::new(id, 1000, vec1(mean), mat(cov)).unwrap()
    }

    #[test]
    fn summary_validation() {
        let bad_sym = mat::<f64>(&[&[1.0, 0.3], &[0.2, 1.0]]);
        assert!(GaussianSummary::new("a", 10, vec1(&[0.0, 0.0]), bad_sym).is_err());
        let not_pd = mat::<f64>(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(GaussianSummary::new("a", 10, vec1(&[0.0, 0.0]), not_pd).is_err());
        let mixed = mat::<f64>(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(GaussianSummary::new("a", 10, vec1(&[0.0]), mixed).is_err());
        assert!(summary("ok", &[0.0, 1.0], &[&[1.0, 0.1], &[0.1, 2.0]]).dim() == 2);
    }

    #[test]
    fn barycenter_of_identical_matrices_is_that_matrix() {
        let sigma = mat::<f64>(&[&[2.0, 0.7], &[0.7, 1.5]]);
        let covs = vec![sigma.clone(), sigma.clone(), sigma.clone()];
        let r = barycenter_covariance(&covs, 1e-10, 500).unwrap();
        assert!(r.converged);
        assert!((r.cov - sigma).norm() < 1e-8);
    }

    #[test]
    fn scalar_barycenter_averages_standard_deviations() {
        let covs = vec![mat::<f64>(&[&[1.0]]), mat::<f64>(&[&[9.0]])];
        let r = barycenter_covariance(&covs, 1e-12, 500).unwrap();
        assert!(r.converged);
        assert!((r.cov[(0, 0)] - 4.0).abs() < 1e-9, "got {}", r.cov[(0, 0)]);
    }

    #[test]
    fn commuting_diagonals_reduce_coordinatewise() {
        let covs = vec![
            mat::<f64>(&[&[1.0, 0.0], &[0.0, 4.0]]),
            mat::<f64>(&[&[9.0, 0.0], &[0.0, 16.0]]),
        ];
        let r = barycenter_covariance(&covs, 1e-11, 500).unwrap();
        assert!(r.converged);
        assert!((r.cov[(0, 0)] - 4.0).abs() < 1e-8);
        assert!((r.cov[(1, 1)] - 9.0).abs() < 1e-8);
        assert!(r.cov[(0, 1)].abs() < 1e-8);
    }

    #[test]
    fn fixed_point_residual_is_small_at_convergence() {
        let covs = vec![
            mat::<f64>(&[&[2.0, 0.4], &[0.4, 1.0]]),
            mat::<f64>(&[&[5.0, -0.9], &[-0.9, 3.0]]),
            mat::<f64>(&[&[1.5, 0.2], &[0.2, 2.5]]),
        ];
        let tol = 1e-10;
        let r = barycenter_covariance(&covs, tol, 500).unwrap();
        assert!(r.converged, "no convergence in {} iterations", r.iterations);
        let stepped = barycenter_step(&r.cov, &covs).unwrap();
        assert!((stepped - &r.cov).norm() < 10.0 * tol);
    }

    #[test]
    fn exhausted_iterations_reported_as_unconverged() {
        let covs = vec![mat::<f64>(&[&[1.0]]), mat::<f64>(&[&[9.0]])];
        let r = barycenter_covariance(&covs, 1e-14, 1).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn degenerate_covariance_is_rejected() {
        let covs = vec![mat::<f64>(&[&[1e-13]])];
        assert!(matches!(
            barycenter_covariance(&covs, 1e-10, 500),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn consensus_mean_oracles() {
        // Equal means stay put for any covariances.
        let s1 = summary("a", &[3.0, -1.0], &[&[1.0, 0.2], &[0.2, 2.0]]);
        let s2 = summary("b", &[3.0, -1.0], &[&[5.0, -0.5], &[-0.5, 0.7]]);
        let m = consensus_mean(&[s1, s2]).unwrap();
        assert!((m[0] - 3.0).abs() < 1e-12 && (m[1] + 1.0).abs() < 1e-12);

        // Scalar case: precision weighting.
        let s1 = summary("a", &[0.0], &[&[1.0]]);
        let s2 = summary("b", &[10.0], &[&[4.0]]);
        let m = consensus_mean(&[s1, s2]).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-12, "got {}", m[0]);

        // Equal covariances: arithmetic mean.
        let cov: &[&[f64]] = &[&[2.0, 0.3], &[0.3, 1.0]];
        let s1 = summary("a", &[1.0, 5.0], cov);
        let s2 = summary("b", &[3.0, 1.0], cov);
        let m = consensus_mean(&[s1, s2]).unwrap();
        assert!((m[0] - 2.0).abs() < 1e-10 && (m[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn combine_oracles() {
        // K = 1 echoes the input under within-experiment scaling.
        let s = summary("only", &[1.5], &[&[0.36]]);
        let c = combine(&[s.clone()], ScalingPolicy::WithinExperiment, 1e-10, 500).unwrap();
        assert!((c.mean[0] - 1.5).abs() < 1e-10);
        assert!((c.cov[(0, 0)] - 0.36).abs() < 1e-9);

        // K identical posteriors, across-experiments scaling: variance / K.
        let nine: Vec<GaussianSummary<f64>> =
            (0..9).map(|i| summary(&format!("s{i}"), &[1.5], &[&[0.36]])).collect();
        let c = combine(&nine, ScalingPolicy::AcrossExperiments, 1e-10, 500).unwrap();
        assert!((c.mean[0] - 1.5).abs() < 1e-10);
        assert!((c.cov[(0, 0)] - 0.04).abs() < 1e-9, "got {}", c.cov[(0, 0)]);

        // Two scalar posteriors, within-experiment: compose the oracles.
        let s1 = summary("a", &[0.0], &[&[1.0]]);
        let s2 = summary("b", &[10.0], &[&[4.0]]);
        let c = combine(&[s1, s2], ScalingPolicy::WithinExperiment, 1e-10, 500).unwrap();
        assert!((c.mean[0] - 2.0).abs() < 1e-9);
        assert!((c.cov[(0, 0)] - 2.25).abs() < 1e-8, "got {}", c.cov[(0, 0)]);
    }

    #[test]
    fn combine_is_exactly_permutation_invariant() {
        let s1 = summary("exp-a", &[0.3, 1.0], &[&[1.3, 0.4], &[0.4, 0.9]]);
        let s2 = summary("exp-b", &[-2.0, 0.5], &[&[0.8, -0.1], &[-0.1, 2.2]]);
        let s3 = summary("exp-c", &[4.0, -1.5], &[&[2.0, 0.6], &[0.6, 1.1]]);
        let fwd = combine(
            &[s1.clone(), s2.clone(), s3.clone()],
            ScalingPolicy::WithinExperiment,
            1e-10,
            500,
        )
        .unwrap();
        let rev = combine(&[s3, s1, s2], ScalingPolicy::WithinExperiment, 1e-10, 500).unwrap();
        assert_eq!(fwd.mean, rev.mean);
        assert_eq!(fwd.cov, rev.cov);
    }

    fn sample_from(draws: Vec<Vec<f64>>) -> PosteriorSample<f64> {
        let d = draws[0].len();
        PosteriorSample {
            draws,
            param_names: (0..d).map(|i| format!("theta{i}")).collect(),
            acceptance_rate: 0.3,
            w: 1.0,
            rng_seed: 0,
            n_iter: 0,
            n_burn: 0,
        }
    }

    #[test]
    fn gaussianize_validates_input() {
        let few = sample_from(vec![vec![0.0, 1.0]; 50]);
        assert!(matches!(gaussianize(&few, "few"), Err(Error::Precision(_))));
        let constant = sample_from(vec![vec![1.0, 2.0]; 500]);
        assert!(matches!(gaussianize(&constant, "const"), Err(Error::Conditioning(_))));
    }

    #[test]
    fn gaussianize_recovers_standard_normal_moments() {
        let mut rng = seed::stream(17, "wasp-normal", &[]);
        let draws: Vec<Vec<f64>> = (0..100_000)
            .map(|_| vec![f64::std_normal(&mut rng), f64::std_normal(&mut rng)])
            .collect();
        let s = gaussianize(&sample_from(draws), "mc").unwrap();
        assert!(s.mean.iter().all(|m| m.abs() < 0.02), "mean {:?}", s.mean);
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((s.cov - eye).norm() < 0.05);
    }

    #[test]
    fn gaussianize_is_affine_equivariant() {
        let mut rng = seed::stream(18, "wasp-affine", &[]);
        let draws: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>() + 0.3])
            .collect();
        let a = [[2.0, 0.5], [-1.0, 1.5]];
        let b = [3.0, -2.0];
        let transformed: Vec<Vec<f64>> = draws
            .iter()
            .map(|d| {
                vec![
                    a[0][0] * d[0] + a[0][1] * d[1] + b[0],
                    a[1][0] * d[0] + a[1][1] * d[1] + b[1],
                ]
            })
            .collect();
        let base = gaussianize(&sample_from(draws), "base").unwrap();
        let tr = gaussianize(&sample_from(transformed), "tr").unwrap();
        let am = DMatrix::from_fn(2, 2, |i, j| a[i][j]);
        let expected_mean = &am * &base.mean + vec1::<f64>(&b);
        let expected_cov = &am * &base.cov * am.transpose();
        assert!((tr.mean - expected_mean).norm() < 1e-10);
        assert!((tr.cov - expected_cov).norm() < 1e-10);
    }

    #[test]
    fn summary_json_round_trip() {
        let s = summary("round", &[0.5, -1.25], &[&[1.5, 0.25], &[0.25, 2.0]]);
        let back = GaussianSummary::<f64>::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        let c = combine(&[s], ScalingPolicy::AcrossExperiments, 1e-10, 500).unwrap();
        let v = c.to_json();
        assert_eq!(v["scaling"], "across-experiments");
        assert!(v["converged"].as_bool().unwrap());
    }
}
