//! Declarative run configuration: one TOML document per run with nested
//! sections, schema-validated before any compute. Unknown keys are
//! rejected, and the resolved document (defaults filled, seed override
//! applied) is embedded in every run's outputs so a directory can always
//! be regenerated from itself.

use gibbscal::{
    default_w_grid, Error, ForwardModel, IntervalMethod, LinearModel, LogisticRampModel,
    LossFunction, Marginal, ParameterPrior, Quadrature, Result, SaturatingModel,
    ScalingPolicy, VarianceMode,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub data: DataSection,
    pub model: ModelSection,
    pub prior: PriorSection,
    pub loss: LossSection,
    #[serde(default)]
    pub discrepancy: DiscrepancySection,
    pub tuning: TuningSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// One CSV path (columns `x,y`) per experiment, relative to the
    /// config file's directory.
    pub experiments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Built-in model: `straight-line`, `saturating-curve`, or
    /// `logistic-ramp`.
    pub name: String,
    /// Saturation constant (saturating-curve only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Ramp location (logistic-ramp only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loc: Option<f64>,
    /// Ramp width (logistic-ramp only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    /// One entry per parameter coordinate, in model order; with a latent
    /// noise variance the variance prior comes last.
    pub coordinates: Vec<CoordinateSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinateSpec {
    /// `uniform`, `normal`, or `inverse-gamma`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    /// `l2` or `gaussian-nll`.
    pub variant: String,
    /// `plain-sum` or `trapezoid` (l2 only; default plain-sum).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<String>,
    /// `latent` or `fixed` (gaussian-nll only; default latent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<String>,
    /// Known noise variance (gaussian-nll with variance = "fixed").
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscrepancySection {
    /// `gp-empirical-bayes`, `gp-explicit`, `shift-family`, or `none`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nugget: Option<f64>,
    /// Interval of the design where the shift applies (shift-family).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<[f64; 2]>,
    /// Bounds of the uniform shift magnitude (shift-family).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<[f64; 2]>,
    /// Replicate observation-noise standard deviation; defaults to the
    /// fitted kernel's nugget under gp-empirical-bayes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
}

impl Default for DiscrepancySection {
    fn default() -> Self {
        Self {
            kind: "none".into(),
            s2: None,
            length_scale: None,
            nugget: None,
            region: None,
            magnitude: None,
            noise_sd: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    /// `parametric-bootstrap`, `effective-sample-size`, or `fixed`.
    pub variant: String,
    /// Root seed; every stream in the run is derived from it.
    pub seed: u64,
    /// Bootstrap replicates (default 100).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Candidate loss scales (default: 35 log-spaced points in
    /// [0.001, 10]).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_grid: Option<Vec<f64>>,
    /// Interval miss level (default 0.05).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Coverage target for scale selection (default 1 - alpha).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Replicate interval method: `laplace` (default) or `mcmc`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<String>,
    /// Loss scale for variant = "fixed".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Final posterior chain length (default 4000).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    /// Burn-in dropped from the final chain (default 1000).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_burn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    /// `within-experiment` or `across-experiments`.
    pub scaling: String,
    /// Barycenter fixed-point tolerance.
    pub tol: f64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { scaling: "within-experiment".into(), tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    /// Artifact directory, relative to the config file's directory.
    pub directory: String,
}

fn bad(key: &str, why: &str) -> Error {
    Error::Config(format!("{key}: {why}"))
}

fn require(opt: Option<f64>, key: &str) -> Result<f64> {
    opt.ok_or_else(|| bad(key, "is required"))
}

fn forbid(opt: &Option<f64>, key: &str, context: &str) -> Result<()> {
    if opt.is_some() {
        return Err(bad(key, &format!("does not apply to {context}")));
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates a config file. Read or syntax problems are
    /// configuration errors: the file is user input, not run data.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                &format!("must be {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.data.experiments.is_empty() {
            return Err(bad("data.experiments", "must list at least one CSV path"));
        }
        self.model.validate()?;
        if self.prior.coordinates.is_empty() {
            return Err(bad("prior.coordinates", "must list at least one coordinate"));
        }
        for (i, c) in self.prior.coordinates.iter().enumerate() {
            c.validate(i)?;
        }
        self.loss.validate()?;
        self.discrepancy.validate()?;
        self.tuning.validate()?;
        self.ensemble.validate()?;
        if self.outputs.directory.is_empty() {
            return Err(bad("outputs.directory", "must not be empty"));
        }
        Ok(())
    }

    /// Fills every defaulted knob and applies the seed override, producing
    /// the document that gets embedded in the run's outputs.
    pub fn resolved(mut self, seed_override: Option<u64>) -> RunConfig {
        if let Some(seed) = seed_override {
            self.tuning.seed = seed;
        }
        if self.loss.variant == "l2" && self.loss.quadrature.is_none() {
            self.loss.quadrature = Some("plain-sum".into());
        }
        if self.loss.variant == "gaussian-nll" && self.loss.variance.is_none() {
            self.loss.variance = Some("latent".into());
        }
        let t = &mut self.tuning;
        t.b.get_or_insert(100);
        let alpha = *t.alpha.get_or_insert(0.05);
        t.target.get_or_insert(1.0 - alpha);
        t.intervals.get_or_insert_with(|| "laplace".into());
        t.w_grid.get_or_insert_with(default_w_grid::<f64>);
        t.n_iter.get_or_insert(4000);
        t.n_burn.get_or_insert(1000);
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }
}

/// A built-in forward model selected by name.
pub enum BuiltinModel {
    Line,
    Saturating(SaturatingModel<f64>),
    Ramp(LogisticRampModel<f64>),
}

impl BuiltinModel {
    pub fn as_dyn(&self) -> &dyn ForwardModel<f64> {
        match self {
            BuiltinModel::Line => &LinearModel,
            BuiltinModel::Saturating(m) => m,
            BuiltinModel::Ramp(m) => m,
        }
    }
}

impl ModelSection {
    fn validate(&self) -> Result<()> {
        match self.name.as_str() {
            "straight-line" => {
                forbid(&self.a, "model.a", "straight-line")?;
                forbid(&self.loc, "model.loc", "straight-line")?;
                forbid(&self.scale, "model.scale", "straight-line")?;
            }
            "saturating-curve" => {
                if require(self.a, "model.a")? <= 0.0 {
                    return Err(bad("model.a", "must be positive"));
                }
                forbid(&self.loc, "model.loc", "saturating-curve")?;
                forbid(&self.scale, "model.scale", "saturating-curve")?;
            }
            "logistic-ramp" => {
                require(self.loc, "model.loc")?;
                if require(self.scale, "model.scale")? <= 0.0 {
                    return Err(bad("model.scale", "must be positive"));
                }
                forbid(&self.a, "model.a", "logistic-ramp")?;
            }
            other => {
                return Err(bad(
                    "model.name",
                    &format!(
                        "unknown model '{other}' (expected straight-line, \
                         saturating-curve, or logistic-ramp)"
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<BuiltinModel> {
        self.validate()?;
        Ok(match self.name.as_str() {
            "straight-line" => BuiltinModel::Line,
            "saturating-curve" => {
                BuiltinModel::Saturating(SaturatingModel { a: self.a.unwrap() })
            }
            _ => BuiltinModel::Ramp(LogisticRampModel {
                loc: self.loc.unwrap(),
                scale: self.scale.unwrap(),
            }),
        })
    }
}

impl CoordinateSpec {
    fn validate(&self, i: usize) -> Result<()> {
        self.marginal(i).map(|_| ())
    }

    fn marginal(&self, i: usize) -> Result<Marginal<f64>> {
        let key = |field: &str| format!("prior.coordinates[{i}].{field}");
        match self.kind.as_str() {
            "uniform" => {
                forbid(&self.mean, &key("mean"), "uniform")?;
                forbid(&self.sd, &key("sd"), "uniform")?;
                forbid(&self.shape, &key("shape"), "uniform")?;
                forbid(&self.scale, &key("scale"), "uniform")?;
                Ok(Marginal::Uniform {
                    lo: require(self.lo, &key("lo"))?,
                    hi: require(self.hi, &key("hi"))?,
                })
            }
            "normal" => {
                forbid(&self.lo, &key("lo"), "normal")?;
                forbid(&self.hi, &key("hi"), "normal")?;
                forbid(&self.shape, &key("shape"), "normal")?;
                forbid(&self.scale, &key("scale"), "normal")?;
                Ok(Marginal::Normal {
                    mean: require(self.mean, &key("mean"))?,
                    sd: require(self.sd, &key("sd"))?,
                })
            }
            "inverse-gamma" => {
                forbid(&self.lo, &key("lo"), "inverse-gamma")?;
                forbid(&self.hi, &key("hi"), "inverse-gamma")?;
                forbid(&self.mean, &key("mean"), "inverse-gamma")?;
                forbid(&self.sd, &key("sd"), "inverse-gamma")?;
                Ok(Marginal::InverseGamma {
                    shape: require(self.shape, &key("shape"))?,
                    scale: require(self.scale, &key("scale"))?,
                })
            }
            other => Err(bad(
                &key("kind"),
                &format!("unknown kind '{other}' (expected uniform, normal, or inverse-gamma)"),
            )),
        }
    }
}

impl PriorSection {
    pub fn build(&self) -> Result<ParameterPrior<f64>> {
        let marginals: Result<Vec<_>> = self
            .coordinates
            .iter()
            .enumerate()
            .map(|(i, c)| c.marginal(i))
            .collect();
        ParameterPrior::new(marginals?)
    }
}

impl LossSection {
    fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<LossFunction<f64>> {
        match self.variant.as_str() {
            "l2" => {
                if self.variance.is_some() || self.sigma2.is_some() {
                    return Err(bad("loss.variance", "does not apply to the l2 loss"));
                }
                let quadrature = match self.quadrature.as_deref() {
                    None | Some("plain-sum") => Quadrature::PlainSum,
                    Some("trapezoid") => Quadrature::Trapezoid,
                    Some(other) => {
                        return Err(bad(
                            "loss.quadrature",
                            &format!("unknown rule '{other}' (expected plain-sum or trapezoid)"),
                        ));
                    }
                };
                Ok(LossFunction::L2 { quadrature })
            }
            "gaussian-nll" => {
                if self.quadrature.is_some() {
                    return Err(bad("loss.quadrature", "does not apply to gaussian-nll"));
                }
                let variance = match self.variance.as_deref() {
                    None | Some("latent") => {
                        if self.sigma2.is_some() {
                            return Err(bad(
                                "loss.sigma2",
                                "only applies when variance = \"fixed\"",
                            ));
                        }
                        VarianceMode::Latent
                    }
                    Some("fixed") => {
                        let s2 = require(self.sigma2, "loss.sigma2")?;
                        if s2 <= 0.0 {
                            return Err(bad("loss.sigma2", "must be positive"));
                        }
                        VarianceMode::Fixed(s2)
                    }
                    Some(other) => {
                        return Err(bad(
                            "loss.variance",
                            &format!("unknown mode '{other}' (expected latent or fixed)"),
                        ));
                    }
                };
                Ok(LossFunction::GaussianNll { variance })
            }
            other => Err(bad(
                "loss.variant",
                &format!("unknown loss '{other}' (expected l2 or gaussian-nll)"),
            )),
        }
    }
}

impl DiscrepancySection {
    fn validate(&self) -> Result<()> {
        let pair_ok = |p: &Option<[f64; 2]>| p.map(|[lo, hi]| lo < hi).unwrap_or(true);
        match self.kind.as_str() {
            "none" | "gp-empirical-bayes" => {
                if self.s2.is_some() || self.length_scale.is_some() || self.nugget.is_some()
                {
                    return Err(bad(
                        "discrepancy.s2",
                        &format!("kernel values do not apply to kind = \"{}\"", self.kind),
                    ));
                }
                if self.region.is_some() || self.magnitude.is_some() {
                    return Err(bad(
                        "discrepancy.region",
                        &format!("shift values do not apply to kind = \"{}\"", self.kind),
                    ));
                }
            }
            "gp-explicit" => {
                if require(self.s2, "discrepancy.s2")? < 0.0 {
                    return Err(bad("discrepancy.s2", "must be nonnegative"));
                }
                if require(self.length_scale, "discrepancy.length_scale")? <= 0.0 {
                    return Err(bad("discrepancy.length_scale", "must be positive"));
                }
                if self.region.is_some() || self.magnitude.is_some() {
                    return Err(bad(
                        "discrepancy.region",
                        "shift values do not apply to kind = \"gp-explicit\"",
                    ));
                }
                if self.noise_sd.is_none() {
                    return Err(bad(
                        "discrepancy.noise_sd",
                        "is required for kind = \"gp-explicit\"",
                    ));
                }
            }
            "shift-family" => {
                if self.region.is_none() || !pair_ok(&self.region) {
                    return Err(bad(
                        "discrepancy.region",
                        "must be [lo, hi] with lo < hi",
                    ));
                }
                if self.magnitude.is_none() || !pair_ok(&self.magnitude) {
                    return Err(bad(
                        "discrepancy.magnitude",
                        "must be [lo, hi] with lo < hi",
                    ));
                }
                if self.s2.is_some() || self.length_scale.is_some() || self.nugget.is_some()
                {
                    return Err(bad(
                        "discrepancy.s2",
                        "kernel values do not apply to kind = \"shift-family\"",
                    ));
                }
                if self.noise_sd.is_none() {
                    return Err(bad(
                        "discrepancy.noise_sd",
                        "is required for kind = \"shift-family\"",
                    ));
                }
            }
            other => {
                return Err(bad(
                    "discrepancy.kind",
                    &format!(
                        "unknown kind '{other}' (expected gp-empirical-bayes, gp-explicit, \
                         shift-family, or none)"
                    ),
                ));
            }
        }
        if let Some(sd) = self.noise_sd {
            if sd < 0.0 {
                return Err(bad("discrepancy.noise_sd", "must be nonnegative"));
            }
        }
        Ok(())
    }
}

impl TuningSection {
    fn validate(&self) -> Result<()> {
        match self.variant.as_str() {
            "parametric-bootstrap" | "effective-sample-size" => {
                if self.w.is_some() {
                    return Err(bad("tuning.w", "only applies to variant = \"fixed\""));
                }
            }
            "fixed" => {
                let w = require(self.w, "tuning.w")?;
                if w <= 0.0 {
                    return Err(bad("tuning.w", "must be positive"));
                }
            }
            other => {
                return Err(bad(
                    "tuning.variant",
                    &format!(
                        "unknown variant '{other}' (expected parametric-bootstrap, \
                         effective-sample-size, or fixed)"
                    ),
                ));
            }
        }
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(bad("tuning.alpha", &format!("must lie in (0, 1), got {alpha}")));
            }
        }
        if let Some(target) = self.target {
            if !(target > 0.0 && target < 1.0) {
                return Err(bad("tuning.target", &format!("must lie in (0, 1), got {target}")));
            }
        }
        if let Some(b) = self.b {
            if b < 20 {
                return Err(bad("tuning.b", "needs at least 20 replicates"));
            }
        }
        if let Some(grid) = &self.w_grid {
            let increasing =
                grid.windows(2).all(|p| p[0] < p[1]) && grid.first().map_or(false, |&w| w > 0.0);
            if !increasing {
                return Err(bad("tuning.w_grid", "must be positive and strictly increasing"));
            }
        }
        match self.intervals.as_deref() {
            None | Some("laplace") | Some("mcmc") => {}
            Some(other) => {
                return Err(bad(
                    "tuning.intervals",
                    &format!("unknown method '{other}' (expected laplace or mcmc)"),
                ));
            }
        }
        if let (Some(n_iter), Some(n_burn)) = (self.n_iter, self.n_burn) {
            if n_burn >= n_iter {
                return Err(bad("tuning.n_burn", "must be smaller than tuning.n_iter"));
            }
        }
        Ok(())
    }

    pub fn interval_method(&self) -> IntervalMethod {
        match self.intervals.as_deref() {
            Some("mcmc") => IntervalMethod::Mcmc {
                n_iter: self.n_iter.unwrap_or(4000),
                n_burn: self.n_burn.unwrap_or(1000),
            },
            _ => IntervalMethod::Laplace,
        }
    }
}

impl EnsembleSection {
    fn validate(&self) -> Result<()> {
        self.policy().map(|_| ())?;
        if !(self.tol > 0.0) {
            return Err(bad("ensemble.tol", "must be positive"));
        }
        Ok(())
    }

    pub fn policy(&self) -> Result<ScalingPolicy> {
        match self.scaling.as_str() {
            "within-experiment" => Ok(ScalingPolicy::WithinExperiment),
            "across-experiments" => Ok(ScalingPolicy::AcrossExperiments),
            other => Err(bad(
                "ensemble.scaling",
                &format!(
                    "unknown policy '{other}' (expected within-experiment or \
                     across-experiments)"
                ),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1

[data]
experiments = ["toy.csv"]

[model]
name = "straight-line"

[[prior.coordinates]]
kind = "uniform"
lo = 0.0
hi = 1.3

[loss]
variant = "l2"

[tuning]
variant = "parametric-bootstrap"
seed = 7

[discrepancy]
kind = "shift-family"
region = [1.0, 4.0]
magnitude = [-0.2, 0.2]
noise_sd = 0.01

[outputs]
directory = "out"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        let text = cfg.to_toml().unwrap();
        let again: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn resolved_round_trips_too() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        let resolved = cfg.resolved(Some(9));
        assert_eq!(resolved.tuning.seed, 9);
        assert_eq!(resolved.tuning.b, Some(100));
        assert_eq!(resolved.tuning.target, Some(0.95));
        let again: RunConfig = toml::from_str(&resolved.to_toml().unwrap()).unwrap();
        assert_eq!(resolved, again);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = MINIMAL.replace("[outputs]", "typo_key = 1\n[outputs]");
        let err = toml::from_str::<RunConfig>(&text).unwrap_err();
        assert!(err.to_string().contains("typo_key"), "{err}");
    }

    #[test]
    fn rejects_bad_alpha_by_name() {
        let text = MINIMAL.replace("seed = 7", "seed = 7\nalpha = 1.5");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("tuning.alpha"), "{err}");
        assert!(err.is_config());
    }

    #[test]
    fn rejects_misplaced_fields() {
        let text = MINIMAL.replace("variant = \"l2\"", "variant = \"l2\"\nsigma2 = 0.1");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert!(cfg.validate().is_err());

        let text = MINIMAL.replace(
            "name = \"straight-line\"",
            "name = \"straight-line\"\na = 3.0",
        );
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("model.a"), "{err}");
    }

    #[test]
    fn builds_library_types() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        let model = cfg.model.build().unwrap();
        assert_eq!(model.as_dyn().param_dim(), 1);
        let prior = cfg.prior.build().unwrap();
        assert_eq!(prior.dim(), 1);
        cfg.loss.build().unwrap();
        assert_eq!(cfg.ensemble.policy().unwrap(), ScalingPolicy::WithinExperiment);
    }
}
