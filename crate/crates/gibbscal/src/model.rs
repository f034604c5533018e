//! Forward models: deterministic maps from calibration parameters to
//! predicted responses at the experiment inputs.

use crate::num::Scalar;

/// A computer model η(x; θ) evaluated pointwise over the experiment inputs.
///
/// Implementations must be deterministic. `theta` always has length
/// `param_dim()`; callers guarantee this before invoking `eval`.
pub trait ForwardModel<S: Scalar>: Send + Sync {
    /// Number of calibration parameters θ.
    fn param_dim(&self) -> usize;

    /// Predicted response at each input point.
    fn eval(&self, x: &[S], theta: &[S]) -> Vec<S>;

    /// Short identifier recorded in output metadata.
    fn name(&self) -> &'static str;
}

/// η(x; θ) = θ·x, the archetypal one-parameter misspecifiable model.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearModel;

impl<S: Scalar> ForwardModel<S> for LinearModel {
    fn param_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[S], theta: &[S]) -> Vec<S> {
        x.iter().map(|&xi| theta[0] * xi).collect()
    }

    fn name(&self) -> &'static str {
        "linear"
    }
}

/// η(x; θ) = θ·x / (1 + x/a): linear near zero, saturating toward θ·a.
/// Generating data from this curve and fitting `LinearModel` produces a
/// smooth, monotone model discrepancy.
#[derive(Debug, Clone, Copy)]
pub struct SaturatingModel<S> {
    /// Saturation constant a > 0.
    pub a: S,
}

impl<S: Scalar> ForwardModel<S> for SaturatingModel<S> {
    fn param_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[S], theta: &[S]) -> Vec<S> {
        x.iter().map(|&xi| theta[0] * xi / (S::one() + xi / self.a)).collect()
    }

    fn name(&self) -> &'static str {
        "saturating"
    }
}

/// η(x; θ) = θ / (1 + exp(−(x − loc)/scale)), a sigmoidal ramp whose height
/// is the calibration parameter.
#[derive(Debug, Clone, Copy)]
pub struct LogisticRampModel<S> {
    pub loc: S,
    pub scale: S,
}

impl<S: Scalar> ForwardModel<S> for LogisticRampModel<S> {
    fn param_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[S], theta: &[S]) -> Vec<S> {
        x.iter()
            .map(|&xi| {
                let z = (xi - self.loc) / self.scale;
                theta[0] / (S::one() + (-z).exp())
            })
            .collect()
    }

    fn name(&self) -> &'static str {
        "logistic-ramp"
    }
}

/// Adapter wrapping a closure as a model, for tests and one-off studies.
pub struct FnModel<S, F>
where
    F: Fn(&[S], &[S]) -> Vec<S> + Send + Sync,
{
    dim: usize,
    name: &'static str,
    f: F,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar, F> FnModel<S, F>
where
    F: Fn(&[S], &[S]) -> Vec<S> + Send + Sync,
{
    pub fn new(dim: usize, name: &'static str, f: F) -> Self {
        Self { dim, name, f, _marker: std::marker::PhantomData }
    }
}

impl<S: Scalar, F> ForwardModel<S> for FnModel<S, F>
where
    F: Fn(&[S], &[S]) -> Vec<S> + Send + Sync,
{
    fn param_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[S], theta: &[S]) -> Vec<S> {
        (self.f)(x, theta)
    }

    fn name(&self) -> &'static str {
        self.name
    }
}
