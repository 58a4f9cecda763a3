//! Loss, Adam, the training loop and the SE-placement ablation.

mod ablation;
mod adam;
mod trainer;

pub use crate::tensor::ops::cross_entropy;
pub use ablation::{ablate, AblationEntry, AblationReport};
pub use adam::{AdamConfig, AdamState};
pub use trainer::{
    argmax, evaluate, predictions, EpochRecord, History, LrSchedule, TrainConfig, Trainer,
};
