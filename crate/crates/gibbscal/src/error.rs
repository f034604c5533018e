//! Crate-wide error type. Variants follow the failure taxonomy used across
//! the modules: configuration and data problems are user-fixable, the
//! numeric variants indicate the computation could not be completed.

/// Unified error for all calibration operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value (bad level, empty grid, bounds, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data violates an invariant (lengths, ordering, missing column).
    #[error("data error: {0}")]
    Data(String),
    /// Structural mismatch between shapes that should agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix factorization or eigenvalue floor failure.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    /// Optimizer failed to produce a finite optimum.
    #[error("optimization error: {0}")]
    Optimization(String),
    /// Sampler could not find a valid starting point.
    #[error("initialization error: {0}")]
    Initialization(String),
    /// Loss-scale tuning failed (curve never reaches target, too many
    /// replicate failures, ...).
    #[error("tuning error: {0}")]
    Tuning(String),
    /// Not enough draws/precision for the requested summary.
    #[error("precision error: {0}")]
    Precision(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by user-provided configuration rather than data
    /// content or numeric failure. Used by callers mapping errors to exit codes.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }

    /// True for errors attributable to input data files.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Data(_) | Error::Dimension(_) | Error::Io(_) | Error::Csv(_)
        )
    }
}
