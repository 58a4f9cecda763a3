//! Image ingestion, stratified splitting, augmentation, standardization and
//! the seeded synthetic pattern corpus.

mod augment;
mod dataset;
mod image;
mod rng;
mod standardize;
mod synth;

pub use augment::{
    apply_draw, augment, flip_horizontal, resize, rotate, translate, zoom, AugmentDraw, AugmentSpec,
};
pub use dataset::{load_folder, FolderLoad, Item, LabeledDataset, SkippedFile};
pub use image::Image;
pub use rng::{derive_seed, Rng};
pub use standardize::Standardization;
pub use synth::{Motif, MotifFamily, SynthSpec};
