//! Calibration of imperfect simulation models against field data.
//!
//! The centerpiece is the tempered (Gibbs) posterior
//! p_w(θ | y) ∝ exp(−w · l(y, θ)) π(θ): an ordinary Bayesian posterior when
//! the loss is a negative log likelihood and w = 1, and a deliberately
//! flattened one for w < 1. When the simulation model cannot reproduce the
//! data-generating process, full-weight posteriors concentrate on a biased
//! parameter value with intervals that are far too confident; shrinking w
//! restores honest uncertainty. This crate provides:
//!
//! - random-walk sampling and MAP estimation for tempered posteriors over
//!   box-supported priors ([`sampler`]);
//! - bootstrap estimation of the frequentist coverage of credible
//!   intervals as a function of w, and selection of the scale whose
//!   coverage matches a target level ([`tuning`]);
//! - squared-exponential GP tools for modeling residual discrepancy,
//!   including marginal-likelihood fitting, generalized least squares, and
//!   effective-sample-size diagnostics ([`gp`]);
//! - fusion of independently calibrated posteriors through the Gaussian
//!   Wasserstein barycenter ([`wasp`]);
//! - self-contained reproductions of three reference studies
//!   ([`harness`]).
//!
//! Numerical kernels are generic over the floating-point type through the
//! [`num::Scalar`] trait; the `*64` aliases at the crate root fix f64 for
//! everyday use.

pub mod data;
pub mod error;
pub mod gp;
pub mod harness;
pub mod loss;
pub mod model;
pub mod num;
pub mod optim;
pub mod prior;
pub mod sampler;
pub mod seed;
pub mod stats;
pub mod tuning;
pub mod wasp;

pub use data::ExperimentData;
pub use error::{Error, Result};
pub use gp::{
    effective_sample_size, empirical_discrepancy, fit_gp_mle, gls_fit, gp_log_marginal,
    kernel_ess, sample_gp, DiscrepancyKind, DiscrepancyPrior, GlsFit, SqExpKernel,
};
pub use harness::{
    run_ensemble_demo, run_simulation_study, run_toy, run_zero_discrepancy_control,
    simulation_table, toy_data, AutocorrTime, EnsembleExperimentReport, EnsembleReport,
    ScaleMethod, SimResult, SimSetting, SimTable, SimTableRow, SyntheticEnsembleSpec,
    ToyMethod, ToyMethodResult, ToyProblemSpec, ToyReport, TuningMode,
};
pub use loss::{LossFunction, Quadrature, VarianceMode};
pub use model::{FnModel, ForwardModel, LinearModel, LogisticRampModel, SaturatingModel};
pub use num::Scalar;
pub use optim::{multistart_nelder_mead, nelder_mead, OptimOptions, OptimResult};
pub use prior::{Marginal, ParameterPrior};
pub use sampler::{
    credible_interval, interval_from_draws, map_estimate, sample_gibbs, CredibleInterval,
    GibbsPosteriorSpec, MapConfig, PosteriorSample, SamplerConfig,
};
pub use tuning::{
    default_w_grid, laplace_intervals, nonparametric_block_bootstrap,
    parametric_bootstrap_coverage, parametric_bootstrap_map_variant, select_loss_scale,
    select_loss_scale_with_policy, BootstrapConfig, CalibrationProblem, CoverageCurve,
    CoveragePoint, IntervalMethod, SelectionPolicy,
};
pub use wasp::{
    barycenter_covariance, combine, consensus_mean, gaussianize, subset_scale_multiplier,
    BarycenterResult, ConsensusPosterior, GaussianSummary, ScalingPolicy,
};

/// Double-precision aliases for the main domain types.
pub type Data64 = ExperimentData<f64>;
pub type Prior64 = ParameterPrior<f64>;
pub type Loss64 = LossFunction<f64>;
pub type Kernel64 = SqExpKernel<f64>;
pub type Sample64 = PosteriorSample<f64>;
pub type Curve64 = CoverageCurve<f64>;
pub type Summary64 = GaussianSummary<f64>;
pub type Consensus64 = ConsensusPosterior<f64>;

/// Single-precision aliases; every operation accepts them, though the
/// bundled studies and the command-line tool run in double precision.
pub type Data32 = ExperimentData<f32>;
pub type Prior32 = ParameterPrior<f32>;
pub type Loss32 = LossFunction<f32>;
pub type Kernel32 = SqExpKernel<f32>;
pub type Sample32 = PosteriorSample<f32>;
