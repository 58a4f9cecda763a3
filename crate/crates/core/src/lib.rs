//! SResNet-18: a ResNet-18 with a single squeeze-and-excitation gate at a
//! configurable stage boundary, trained from scratch on CPU.
//!
//! The crate covers the whole pipeline: a small reverse-mode autodiff engine
//! ([`tensor`]), residual and SE blocks ([`nn`]), model assembly and
//! checkpoints ([`model`]), Adam training and the placement ablation
//! ([`train`]), dataset ingestion, augmentation and a synthetic pattern corpus
//! ([`data`]), class prototypes with cosine / Euclidean / Manhattan reports
//! ([`similarity`]), and CSV / SVG choropleth export ([`viz`]).

pub mod cli;
pub mod data;
pub mod error;
pub mod model;
pub mod nn;
pub mod similarity;
pub mod tensor;
pub mod train;
pub mod viz;

pub use error::{Error, Result};
