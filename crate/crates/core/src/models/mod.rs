//! The cascade stage networks, the MNIST reference networks, staged
//! training with frozen shared layers, and single-sample prediction.

mod bundle;
mod input;
mod specs;
mod train;

pub use bundle::{copy_trunk, trunk_digest, CascadeBundle, BUNDLE_FILE};
pub use input::{batch_tensor, InputTransform};
pub use specs::{
    build_fcnet, build_fcnet_with_input, build_mnist_nets, build_stage2, build_stage3, MnistNet, FCNET_HIDDEN,
    STAGE1_RESOLUTION, STAGE2_HEAD_HIDDEN, STAGE3_HEAD_HIDDEN,
};
pub use train::{evaluate_accuracy, predict, predict_input, EpochRecord, Prediction, TrainConfig, TrainOutcome, train_stage};

use crate::datasets::DatasetError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("stage networks support input resolutions 32 and 64, got {0}")]
    UnsupportedResolution(usize),
    #[error("trunk does not fit stage 3: {0}")]
    TrunkShapeMismatch(String),
    #[error("frozen parameter {0} does not exist")]
    FrozenNameUnknown(String),
    #[error("data does not match the network input: {0}")]
    VariantMismatch(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("bad training configuration: {0}")]
    Config(String),
    #[error("bad bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
