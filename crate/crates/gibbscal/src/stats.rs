//! Small-sample statistics shared across modules: interpolated quantiles,
//! moments, rank correlation, and a two-sample Kolmogorov-Smirnov test.

use crate::num::{abs, Scalar};

/// Sorts a slice of scalars ascending (NaNs, if any, sort last).
pub fn sort_scalars<S: Scalar>(v: &mut [S]) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
}

/// Linear-interpolation quantile (type 7) of an ascending-sorted slice:
/// `q(p)` interpolates between the order statistics at index `(n-1)p`.
pub fn quantile_type7_sorted<S: Scalar>(sorted: &[S], p: f64) -> S {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level outside [0,1]");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = lo.min(n - 2) + 1;
    let frac = S::of(h - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Type-7 quantile of unsorted data (copies and sorts).
pub fn quantile_type7<S: Scalar>(values: &[S], p: f64) -> S {
    let mut v = values.to_vec();
    sort_scalars(&mut v);
    quantile_type7_sorted(&v, p)
}

pub fn mean<S: Scalar>(v: &[S]) -> S {
    assert!(!v.is_empty());
    v.iter().copied().sum::<S>() / S::of_usize(v.len())
}

/// Unbiased sample variance (n−1 denominator).
pub fn variance<S: Scalar>(v: &[S]) -> S {
    assert!(v.len() >= 2);
    let m = mean(v);
    v.iter().map(|&x| (x - m) * (x - m)).sum::<S>() / S::of_usize(v.len() - 1)
}

pub fn sd<S: Scalar>(v: &[S]) -> S {
    variance(v).sqrt()
}

/// Sample skewness (biased, moment estimator); 0 for symmetric samples.
pub fn skewness<S: Scalar>(v: &[S]) -> S {
    let m = mean(v);
    let n = S::of_usize(v.len());
    let m2 = v.iter().map(|&x| (x - m) * (x - m)).sum::<S>() / n;
    let m3 = v.iter().map(|&x| (x - m) * (x - m) * (x - m)).sum::<S>() / n;
    if m2 == S::zero() {
        S::zero()
    } else {
        m3 / m2.powf(S::of(1.5))
    }
}

/// Two-sample Kolmogorov-Smirnov statistic: sup |F̂₁ − F̂₂|.
pub fn ks_statistic<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_scalars(&mut a);
    sort_scalars(&mut b);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let xa = a[i].f64();
        let xb = b[j].f64();
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Asymptotic two-sample KS p-value with the Stephens small-sample
/// correction: P(D > observed) under the null of equal distributions.
pub fn ks_two_sample_pvalue<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let d = ks_statistic(a, b);
    let n = a.len() as f64;
    let m = b.len() as f64;
    let ne = (n * m / (n + m)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    kolmogorov_survival(lambda)
}

/// Kolmogorov distribution tail Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²).
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Spearman rank correlation; ties get mean ranks.
pub fn spearman_rho<S: Scalar>(x: &[S], y: &[S]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson_f64(&rx, &ry)
}

fn ranks<S: Scalar>(v: &[S]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson_f64(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Binomial standard error sqrt(p(1−p)/n) of a proportion estimate.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// |a − b| as a convenience for tolerance checks.
pub fn absdiff<S: Scalar>(a: S, b: S) -> S {
    abs(a - b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn quantile_matches_hand_computed_interpolation() {
        // draws 1..=100: the 5% point interpolates 95% of the way from 5 to 6,
        // the 95% point 5% of the way from 95 to 96.
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert!((quantile_type7(&v, 0.05) - 5.95).abs() < 1e-12);
        assert!((quantile_type7(&v, 0.95) - 95.05).abs() < 1e-12);
        assert_eq!(quantile_type7(&v, 0.0), 1.0);
        assert_eq!(quantile_type7(&v, 1.0), 100.0);
    }

    #[test]
    fn quantile_single_point() {
        assert_eq!(quantile_type7(&[3.5f64], 0.25), 3.5);
    }

    #[test]
    fn moments_on_known_sample() {
        let v = [1.0f64, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert!((variance(&v) - 5.0 / 3.0).abs() < 1e-14);
        assert!(skewness(&v).abs() < 1e-14);
    }

    #[test]
    fn ks_same_sample_zero_distance() {
        let v = [0.3f64, 0.7, 1.1, 2.0];
        assert_eq!(ks_statistic(&v, &v), 0.0);
        assert!(ks_two_sample_pvalue(&v, &v) > 0.99);
    }

    #[test]
    fn ks_disjoint_samples_distance_one() {
        let a = [0.0f64, 1.0, 2.0];
        let b = [10.0f64, 11.0, 12.0];
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn ks_pvalue_calibrated_under_null() {
        // Same-distribution samples should rarely produce small p-values.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut rejections = 0;
        for _ in 0..200 {
            let a: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            let b: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            if ks_two_sample_pvalue(&a, &b) < 0.05 {
                rejections += 1;
            }
        }
        // Expect about 10 rejections out of 200; allow generous slack.
        assert!(rejections <= 25, "KS rejected {rejections}/200 null cases");
    }

    #[test]
    fn spearman_detects_monotone_relation() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0f64, 4.0, 6.0, 8.0, 10.0];
        assert!((spearman_rho(&x, &y) - 1.0).abs() < 1e-12);
        let yrev = [10.0f64, 8.0, 6.0, 4.0, 2.0];
        assert!((spearman_rho(&x, &yrev) + 1.0).abs() < 1e-12);
    }
}
