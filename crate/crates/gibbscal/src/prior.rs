//! Independent-marginal parameter priors with sampling and log densities.

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// One prior marginal. Inverse-gamma uses the (shape, scale) convention with
/// density ∝ x^{−shape−1} exp(−scale/x) on x > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal<S> {
    Uniform { lo: S, hi: S },
    Normal { mean: S, sd: S },
    InverseGamma { shape: S, scale: S },
}

impl<S: Scalar> Marginal<S> {
    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::Config(format!(
                        "uniform prior needs lo < hi, got [{}, {}]",
                        lo.f64(),
                        hi.f64()
                    )));
                }
            }
            Marginal::Normal { sd, .. } => {
                if !(sd > S::zero()) {
                    return Err(Error::Config("normal prior needs sd > 0".into()));
                }
            }
            Marginal::InverseGamma { shape, scale } => {
                if !(shape > S::zero() && scale > S::zero()) {
                    return Err(Error::Config(
                        "inverse-gamma prior needs shape > 0 and scale > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Support interval; unbounded ends are ±∞.
    pub fn support(&self) -> (S, S) {
        let inf = S::of(f64::INFINITY);
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Normal { .. } => (-inf, inf),
            Marginal::InverseGamma { .. } => (S::zero(), inf),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match *self {
            Marginal::Uniform { lo, hi } => rng.random_range(lo..hi),
            Marginal::Normal { mean, sd } => mean + sd * S::std_normal(rng),
            Marginal::InverseGamma { shape, scale } => {
                // If G ~ Gamma(shape, 1) then scale/G ~ InvGamma(shape, scale).
                scale / S::gamma(rng, shape, S::one())
            }
        }
    }

    pub fn log_density(&self, x: S) -> S {
        let neg_inf = S::of(f64::NEG_INFINITY);
        match *self {
            Marginal::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    neg_inf
                } else {
                    -(hi - lo).ln()
                }
            }
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                let half = S::of(0.5);
                -half * z * z - sd.ln() - half * S::of((2.0 * std::f64::consts::PI).ln())
            }
            Marginal::InverseGamma { shape, scale } => {
                if x <= S::zero() {
                    return neg_inf;
                }
                let ln_gamma = S::of(statrs::function::gamma::ln_gamma(shape.f64()));
                shape * scale.ln() - ln_gamma - (shape + S::one()) * x.ln() - scale / x
            }
        }
    }
}

/// Product prior over the calibration parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPrior<S: Scalar> {
    marginals: Vec<Marginal<S>>,
}

impl<S: Scalar> ParameterPrior<S> {
    pub fn new(marginals: Vec<Marginal<S>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Config("prior needs at least one marginal".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal<S>] {
        &self.marginals
    }

    pub fn support(&self, i: usize) -> (S, S) {
        self.marginals[i].support()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        self.marginals.iter().map(|m| m.sample(rng)).collect()
    }

    /// Joint log density; −∞ anywhere outside the support.
    pub fn log_density(&self, theta: &[S]) -> S {
        assert_eq!(theta.len(), self.marginals.len(), "prior dimension mismatch");
        self.marginals.iter().zip(theta).map(|(m, &t)| m.log_density(t)).sum()
    }

    /// True when every coordinate lies inside its marginal support.
    pub fn in_support(&self, theta: &[S]) -> bool {
        self.log_density(theta).is_finite()
    }
}
