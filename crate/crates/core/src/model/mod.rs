//! ResNet-18 / SResNet-18 assembly, forward passes and checkpoints.

mod checkpoint;
mod config;
mod resnet;

pub use checkpoint::{
    Checkpoint, Header, TensorEntry, TensorKind, TransferReport, FORMAT_VERSION, MAGIC,
};
pub use config::{ModelConfig, Scale, SeScheme};
pub use resnet::{Mode, Model, TrainForward};
