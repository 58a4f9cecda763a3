use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::image::Image;
use crate::error::{Error, Result};

/// Per-channel `(x - mean) / std`. Serialized as the standardization stats file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
    /// Membership hash of the split the statistics came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_split_hash: Option<String>,
}

impl Standardization {
    pub fn new(mean: [f64; 3], std: [f64; 3]) -> Result<Self> {
        let s = Self {
            mean,
            std,
            source_split_hash: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn identity() -> Self {
        Self {
            mean: [0.0; 3],
            std: [1.0; 3],
            source_split_hash: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in 0..3 {
            if !(self.std[c] > 0.0 && self.std[c].is_finite()) || !self.mean[c].is_finite() {
                return Err(Error::Config(format!(
                    "channel {c}: std must be positive and finite (mean {}, std {})",
                    self.mean[c], self.std[c]
                )));
            }
        }
        Ok(())
    }

    /// Population mean and standard deviation per channel over every pixel
    /// of every image in `ds`.
    pub fn compute(ds: &LabeledDataset) -> Result<Self> {
        let (h, w) = ds.image_size().ok_or_else(|| {
            Error::Dataset("cannot compute statistics of an empty dataset".into())
        })?;
        let count = (ds.len() * h * w) as f64;
        let mut mean = [0.0; 3];
        for item in ds.items() {
            for (c, m) in mean.iter_mut().enumerate() {
                *m += item.image.channel(c).iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut var = [0.0; 3];
        for item in ds.items() {
            for (c, v) in var.iter_mut().enumerate() {
                *v += item
                    .image
                    .channel(c)
                    .iter()
                    .map(|x| (x - mean[c]).powi(2))
                    .sum::<f64>();
            }
        }
        let std = var.map(|v| (v / count).sqrt());
        let s = Self {
            mean,
            std,
            source_split_hash: Some(ds.membership_hash()),
        };
        s.validate().map_err(|_| {
            Error::Config(format!(
                "training split has a constant channel (std {std:?}); cannot standardize"
            ))
        })?;
        Ok(s)
    }

    pub fn apply(&self, image: &mut Image) {
        let plane = image.height() * image.width();
        for (i, v) in image.data_mut().iter_mut().enumerate() {
            let c = i / plane;
            *v = (*v - self.mean[c]) / self.std[c];
        }
    }

    pub fn applied(&self, image: &Image) -> Image {
        let mut out = image.clone();
        self.apply(&mut out);
        out
    }

    pub fn apply_dataset(&self, ds: &mut LabeledDataset) {
        for item in ds.items_mut() {
            self.apply(&mut item.image);
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: Self = serde_json::from_str(&text)?;
        s.validate()?;
        Ok(s)
    }
}
