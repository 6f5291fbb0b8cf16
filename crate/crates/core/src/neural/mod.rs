//! Self-contained dense-network engine with analytic backpropagation, the
//! mixture-density head, and the forward-consistent training loss.

mod checkpoint;
mod loss;
mod mdn;
mod net;
mod train;

pub use checkpoint::{
    load_model, save_model, Model, Standardization, TrainConfigEcho, TrainingDigest,
    MODEL_FORMAT_VERSION,
};
pub use loss::{batch_loss, batch_loss_and_grad, fwmdn_loss, BatchEval, LossKind};
pub use mdn::{
    log_mixture_density, mdn_head, mdn_head_batch, mdn_nll, mdn_nll_grad_raw, MixtureBatch,
    MixtureParams, SIGMA_FLOOR_FRACTION,
};
pub use net::{
    backprop, forward, forward_batch, forward_cached, DenseNetSpec, ForwardCache, Gradients,
    HiddenActivation, OutputHead, Parameters,
};
pub use train::{train, EpochStats, TrainConfig, TrainData, TrainingLog};

/// Errors from network construction, training and persistence.
#[derive(Debug, thiserror::Error)]
pub enum NeuralError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite loss at sample {sample}")]
    NonFinite { sample: usize },
    #[error("training fault at epoch {epoch}: {detail}")]
    TrainingFault { epoch: usize, detail: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
