//! Randomized invariant checks for the numeric building blocks.
//!
//! Each property holds for every valid input, not just the frozen study
//! designs, so these run on generated data. Exact (bitwise) assertions are
//! used wherever the claimed invariance is exact in floating point, e.g.
//! scaling by a power of two.

use gibbscal::{
    combine, effective_sample_size, gaussianize, interval_from_draws, stats, GaussianSummary,
    PosteriorSample, ScalingPolicy,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Residual series with enough points and spread for an ACF estimate.
fn residual_series() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0..10.0f64, 16..200).prop_filter(
        "series must not be constant",
        |v| {
            let first = v[0];
            v.iter().any(|&x| (x - first).abs() > 1e-9)
        },
    )
}

fn unit_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

/// Mean vector and SPD covariance of a given dimension, built as A·Aᵀ + c·I
/// so the smallest eigenvalue is bounded away from zero.
fn gaussian_summary(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let mean = proptest::collection::vec(-5.0..5.0f64, dim);
    let a = proptest::collection::vec(-2.0..2.0f64, dim * dim);
    (mean, a)
}

fn spd_from_factor(dim: usize, a: &[f64]) -> DMatrix<f64> {
    let f = DMatrix::from_row_slice(dim, dim, a);
    &f * f.transpose() + DMatrix::identity(dim, dim) * 0.5
}

fn sample_from_draws(draws: Vec<Vec<f64>>) -> PosteriorSample<f64> {
    let dim = draws[0].len();
    PosteriorSample {
        draws,
        param_names: (0..dim).map(|j| format!("theta_{j}")).collect(),
        acceptance_rate: 0.3,
        w: 1.0,
        rng_seed: 0,
        n_iter: 0,
        n_burn: 0,
    }
}

proptest! {
    /// Autocorrelation is scale-free, and multiplying by a power of two is
    /// exact in floating point, so the effective sample size must not move
    /// by a single ulp.
    #[test]
    fn ess_is_exactly_scale_invariant(r in residual_series()) {
        let x = unit_grid(r.len());
        let scaled: Vec<f64> = r.iter().map(|v| v * 4.0).collect();
        let base = effective_sample_size(&r, &x);
        let after = effective_sample_size(&scaled, &x);
        prop_assert_eq!(base.to_bits(), after.to_bits());
    }

    /// The estimator is clamped to [1, n] by construction; confirm the
    /// clamp holds for arbitrary series.
    #[test]
    fn ess_stays_within_bounds(r in residual_series()) {
        let x = unit_grid(r.len());
        let n_e = effective_sample_size(&r, &x);
        prop_assert!(n_e >= 1.0);
        prop_assert!(n_e <= r.len() as f64);
    }

    /// Consensus fusion sorts inputs by id internally, so feeding the same
    /// summaries in any order must give bitwise-identical output.
    #[test]
    fn consensus_is_permutation_invariant(
        parts in proptest::collection::vec(gaussian_summary(2), 2..5),
        seed in 0u64..1000,
    ) {
        let summaries: Vec<GaussianSummary<f64>> = parts
            .iter()
            .enumerate()
            .map(|(i, (mean, a))| {
                GaussianSummary::new(
                    format!("part-{i}"),
                    200,
                    DVector::from_row_slice(mean),
                    spd_from_factor(2, a),
                )
                .unwrap()
            })
            .collect();
        let mut shuffled = summaries.clone();
        // Deterministic pseudo-shuffle driven by the generated seed.
        let k = shuffled.len();
        for i in (1..k).rev() {
            let j = (seed as usize).wrapping_mul(i + 7) % (i + 1);
            shuffled.swap(i, j);
        }
        let a = combine(&summaries, ScalingPolicy::WithinExperiment, 1e-9, 500).unwrap();
        let b = combine(&shuffled, ScalingPolicy::WithinExperiment, 1e-9, 500).unwrap();
        prop_assert_eq!(a.mean.as_slice(), b.mean.as_slice());
        prop_assert_eq!(a.cov.as_slice(), b.cov.as_slice());
    }

    /// Rescaling every draw by a power of two rescales the moment summary
    /// exactly: mean by c, covariance by c².
    #[test]
    fn moment_summary_is_affine_equivariant(
        raw in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 100..300),
    ) {
        let c = 2.0f64;
        let draws: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![a, b]).collect();
        let scaled: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![c * a, c * b]).collect();
        let s1 = gaussianize(&sample_from_draws(draws), "base").unwrap();
        let s2 = gaussianize(&sample_from_draws(scaled), "scaled").unwrap();
        for j in 0..2 {
            prop_assert_eq!((c * s1.mean[j]).to_bits(), s2.mean[j].to_bits());
            for i in 0..2 {
                prop_assert_eq!((c * c * s1.cov[(i, j)]).to_bits(), s2.cov[(i, j)].to_bits());
            }
        }
    }

    /// Equal-tailed intervals must bracket the median, and shrinking the
    /// tail mass (smaller α) can only widen them.
    #[test]
    fn intervals_bracket_median_and_nest(
        mut draws in proptest::collection::vec(-50.0..50.0f64, 10..400),
        alpha in 0.02..0.5f64,
    ) {
        let (lo, hi) = interval_from_draws(&draws, alpha);
        stats::sort_scalars(&mut draws);
        let med = stats::quantile_type7_sorted(&draws, 0.5);
        prop_assert!(lo <= med && med <= hi);

        let (lo_wide, hi_wide) = interval_from_draws(&draws, alpha / 2.0);
        prop_assert!(lo_wide <= lo);
        prop_assert!(hi_wide >= hi);
    }

    /// Type-7 quantiles are monotone in p and confined to the data range.
    #[test]
    fn quantiles_are_monotone_in_p(
        mut v in proptest::collection::vec(-100.0..100.0f64, 1..200),
        p1 in 0.0..1.0f64,
        p2 in 0.0..1.0f64,
    ) {
        stats::sort_scalars(&mut v);
        let (lo, hi) = (p1.min(p2), p1.max(p2));
        let qlo = stats::quantile_type7_sorted(&v, lo);
        let qhi = stats::quantile_type7_sorted(&v, hi);
        prop_assert!(qlo <= qhi);
        prop_assert!(*v.first().unwrap() <= qlo);
        prop_assert!(qhi <= *v.last().unwrap());
    }
}
