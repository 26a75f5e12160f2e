//! Minimal dense-tensor neural-network engine with hand-written backward
//! passes, an SGD optimizer, gradient checking, cost accounting, and a
//! binary checkpoint format.

mod arch;
mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod loss;
mod network;
mod optim;
mod scalar;
mod tensor;

pub use arch::{ArchSpec, CostSummary, LayerSpec};
pub use checkpoint::{ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use layers::Mode;
pub use network::{Layer, Network};
pub use optim::Sgd;
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Parameter count and per-sample operation count of an architecture.
pub fn count_params_flops(spec: &ArchSpec) -> Result<CostSummary, NnError> {
    spec.cost()
}

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch norm needs at least 2 samples in training mode, got {0}")]
    BatchTooSmall(usize),
    #[error("backward called without a training-mode forward")]
    NoForwardCache,
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("bad architecture descriptor: {0}")]
    Descriptor(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
