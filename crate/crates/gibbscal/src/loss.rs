//! Loss functions scored by the tempered posterior.

use crate::num::Scalar;

/// Spatial weighting applied to squared residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Unweighted sum over observation points.
    #[default]
    PlainSum,
    /// Trapezoid-rule weights in x, approximating ∫ r(x)² dx. Endpoints get
    /// half the spacing; interior points get the mean of adjacent spacings.
    Trapezoid,
}

/// Treatment of the observation variance in the Gaussian likelihood loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode<S> {
    /// σ² is a latent coordinate sampled alongside θ.
    Latent,
    /// σ² is held at a known value.
    Fixed(S),
}

/// Loss l(y, θ) entering the tempered posterior exp(−w·l)·π(θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFunction<S> {
    L2 { quadrature: Quadrature },
    GaussianNll { variance: VarianceMode<S> },
}

impl<S: Scalar> LossFunction<S> {
    /// Number of latent coordinates the sampler appends after θ.
    pub fn latent_dim(&self) -> usize {
        matches!(self, LossFunction::GaussianNll { variance: VarianceMode::Latent }) as usize
    }

    /// Evaluates the loss given predictions and, when the variance is
    /// latent, its current value.
    pub fn evaluate(&self, x: &[S], y: &[S], pred: &[S], latent_sigma2: Option<S>) -> S {
        match *self {
            LossFunction::L2 { quadrature } => l2_loss(x, y, pred, quadrature),
            LossFunction::GaussianNll { variance } => {
                let sigma2 = match variance {
                    VarianceMode::Fixed(v) => v,
                    VarianceMode::Latent => {
                        latent_sigma2.expect("latent variance value not supplied")
                    }
                };
                gaussian_nll_loss(y, pred, sigma2)
            }
        }
    }
}

/// Sum of squared residuals, optionally trapezoid-weighted in x.
///
/// With `PlainSum`, `x = [0, 1]`, `y = [0, 0]`, predictions `[1, 1]` give 2.
/// With `Trapezoid`, `x = [0, 1, 2]` and unit residuals give weights
/// (0.5, 1, 0.5), again summing to 2.
pub fn l2_loss<S: Scalar>(x: &[S], y: &[S], pred: &[S], quadrature: Quadrature) -> S {
    assert_eq!(y.len(), pred.len(), "prediction length mismatch");
    assert_eq!(x.len(), y.len(), "input length mismatch");
    let sq = |i: usize| {
        let r = y[i] - pred[i];
        r * r
    };
    match quadrature {
        Quadrature::PlainSum => (0..y.len()).map(sq).sum(),
        Quadrature::Trapezoid => {
            let n = x.len();
            if n == 1 {
                return sq(0);
            }
            let half = S::of(0.5);
            let mut total = S::zero();
            for i in 0..n {
                let w = if i == 0 {
                    half * (x[1] - x[0])
                } else if i == n - 1 {
                    half * (x[n - 1] - x[n - 2])
                } else {
                    half * (x[i + 1] - x[i - 1])
                };
                total += w * sq(i);
            }
            total
        }
    }
}

/// Gaussian negative log likelihood (n/2)·ln(2πσ²) + Σ r² / (2σ²).
pub fn gaussian_nll_loss<S: Scalar>(y: &[S], pred: &[S], sigma2: S) -> S {
    assert_eq!(y.len(), pred.len(), "prediction length mismatch");
    assert!(sigma2 > S::zero(), "variance must be positive");
    let n = S::of_usize(y.len());
    let two = S::of(2.0);
    let ssr: S = y.iter().zip(pred).map(|(&yi, &pi)| (yi - pi) * (yi - pi)).sum();
    n / two * (two * S::pi() * sigma2).ln() + ssr / (two * sigma2)
}

/// Sum of squared residuals, shared by the conjugate shortcuts.
pub fn sum_squared_residuals<S: Scalar>(y: &[S], pred: &[S]) -> S {
    y.iter().zip(pred).map(|(&yi, &pi)| (yi - pi) * (yi - pi)).sum()
}
