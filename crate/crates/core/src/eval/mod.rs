//! Metrics, noise-robustness protocols, the toy experiment and the
//! non-uniqueness probe.

mod consistency;
mod metrics;
mod probe;
mod sweep;
mod toy;

pub use consistency::{y_consistency, ForwardMode, YConsistency};
pub use metrics::{metric_m, r_squared, MetricM, RSquared};
pub use probe::{nonuniqueness_probe, ProbePair};
pub use sweep::{candidate_profiles, noise_robustness_sweep, EvalReport};
pub use toy::{sample_mixture, toy_curve, toy_experiment, toy_generate, ToyReport};

/// Errors from metric computation and experiment protocols.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Dispersion(#[from] crate::dispersion::DispersionError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;
