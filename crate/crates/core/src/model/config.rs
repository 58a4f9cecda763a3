use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ops::conv_output_size;

/// Where the single SE gate sits, in ResNet stage nomenclature (`conv1` is
/// the stem, `conv2_x`..`conv5_x` are the four residual stages).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeScheme {
    /// Plain ResNet-18.
    None,
    /// Before `conv2_x`, on the stem output.
    S1,
    /// Between `conv2_x` and `conv3_x`.
    S2,
    /// Between `conv3_x` and `conv4_x`; the SResNet-18 default.
    S3,
    /// Between `conv4_x` and `conv5_x`.
    S4,
}

impl SeScheme {
    pub const ALL: [SeScheme; 4] = [SeScheme::S1, SeScheme::S2, SeScheme::S3, SeScheme::S4];

    /// Residual stages (0-based) that run before the gate: `None` for plain
    /// ResNet, `Some(0)` means directly after the stem.
    pub fn stages_before(self) -> Option<usize> {
        match self {
            SeScheme::None => None,
            SeScheme::S1 => Some(0),
            SeScheme::S2 => Some(1),
            SeScheme::S3 => Some(2),
            SeScheme::S4 => Some(3),
        }
    }

    /// 1-based index used in report headings ("Scheme 3").
    pub fn number(self) -> Option<usize> {
        self.stages_before().map(|s| s + 1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SeScheme::None => "none",
            SeScheme::S1 => "s1",
            SeScheme::S2 => "s2",
            SeScheme::S3 => "s3",
            SeScheme::S4 => "s4",
        }
    }

    pub fn boundary(self) -> &'static str {
        match self {
            SeScheme::None => "no SE block",
            SeScheme::S1 => "conv1 -> conv2_x",
            SeScheme::S2 => "conv2_x -> conv3_x",
            SeScheme::S3 => "conv3_x -> conv4_x",
            SeScheme::S4 => "conv4_x -> conv5_x",
        }
    }
}

impl fmt::Display for SeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "resnet" => Ok(SeScheme::None),
            "s1" | "1" => Ok(SeScheme::S1),
            "s2" | "2" => Ok(SeScheme::S2),
            "s3" | "3" => Ok(SeScheme::S3),
            "s4" | "4" => Ok(SeScheme::S4),
            other => Err(Error::Config(format!(
                "unknown SE scheme `{other}` (valid: none, s1, s2, s3, s4)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Standard ResNet-18 widths, 7x7/2 stem plus 3x3/2 max-pool.
    Full,
    /// Quarter widths, 3x3/1 stem, no stem pooling; sized for 32x32 inputs.
    Tiny,
}

impl Scale {
    pub fn width_divisor(self) -> usize {
        match self {
            Scale::Full => 1,
            Scale::Tiny => 4,
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Scale::Full),
            "tiny" => Ok(Scale::Tiny),
            other => Err(Error::Config(format!(
                "unknown model scale `{other}` (valid: full, tiny)"
            ))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Full => "full",
            Scale::Tiny => "tiny",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_classes: usize,
    pub se_scheme: SeScheme,
    /// Full-scale stem width; stage widths are 1x, 2x, 4x, 8x of the scaled value.
    pub stem_channels: usize,
    pub blocks_per_stage: [usize; 4],
    pub se_reduction: usize,
    /// Whether the excitation MLP carries biases.
    pub se_bias: bool,
    /// Expected input (height, width).
    pub input_size: (usize, usize),
    pub scale: Scale,
}

impl ModelConfig {
    pub fn full(num_classes: usize, se_scheme: SeScheme) -> Self {
        Self {
            num_classes,
            se_scheme,
            stem_channels: 64,
            blocks_per_stage: [2, 2, 2, 2],
            se_reduction: 16,
            se_bias: true,
            input_size: (224, 224),
            scale: Scale::Full,
        }
    }

    pub fn tiny(num_classes: usize, se_scheme: SeScheme) -> Self {
        Self {
            se_reduction: 4,
            input_size: (32, 32),
            scale: Scale::Tiny,
            ..Self::full(num_classes, se_scheme)
        }
    }

    pub fn preset(scale: Scale, num_classes: usize, se_scheme: SeScheme) -> Self {
        match scale {
            Scale::Full => Self::full(num_classes, se_scheme),
            Scale::Tiny => Self::tiny(num_classes, se_scheme),
        }
    }

    pub fn stem_width(&self) -> usize {
        self.stem_channels / self.scale.width_divisor()
    }

    pub fn stage_widths(&self) -> [usize; 4] {
        let w = self.stem_width();
        [w, 2 * w, 4 * w, 8 * w]
    }

    /// Dimension of the pooled feature vector fed to the classifier.
    pub fn feature_dim(&self) -> usize {
        self.stage_widths()[3]
    }

    /// Channel count at the SE gate, if any.
    pub fn se_channels(&self) -> Option<usize> {
        self.se_scheme.stages_before().map(|k| match k {
            0 => self.stem_width(),
            k => self.stage_widths()[k - 1],
        })
    }

    /// Spatial size after each of: stem, stage 1..4.
    pub fn spatial_sizes(&self) -> Result<[(usize, usize); 5]> {
        let (mut h, mut w) = self.input_size;
        let mut out = [(0, 0); 5];
        let step = |x: usize, k: usize, s: usize, p: usize| conv_output_size(x, k, s, p);
        match self.scale {
            Scale::Full => {
                h = step(step(h, 7, 2, 3)?, 3, 2, 1)?;
                w = step(step(w, 7, 2, 3)?, 3, 2, 1)?;
            }
            Scale::Tiny => {
                h = step(h, 3, 1, 1)?;
                w = step(w, 3, 1, 1)?;
            }
        }
        out[0] = (h, w);
        for (i, slot) in out.iter_mut().enumerate().skip(1) {
            let stride = if i == 1 { 1 } else { 2 };
            h = step(h, 3, stride, 1)?;
            w = step(w, 3, stride, 1)?;
            *slot = (h, w);
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_classes == 0 {
            return bad("num_classes must be positive".into());
        }
        let div = self.scale.width_divisor();
        if self.stem_channels == 0 || !self.stem_channels.is_multiple_of(div) {
            return bad(format!(
                "stem_channels {} must be a positive multiple of {div} at {} scale",
                self.stem_channels, self.scale
            ));
        }
        if self.blocks_per_stage.contains(&0) {
            return bad(format!(
                "blocks_per_stage {:?} must all be positive",
                self.blocks_per_stage
            ));
        }
        if self.se_reduction == 0 {
            return bad("se_reduction must be positive".into());
        }
        let (h, w) = self.input_size;
        if h == 0 || w == 0 {
            return bad(format!("input_size {h}x{w} must be positive"));
        }
        self.spatial_sizes().map_err(|e| {
            Error::Config(format!(
                "input {h}x{w} too small for {} scale: {e}",
                self.scale
            ))
        })?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_spatial_sizes() {
        let c = ModelConfig::full(10, SeScheme::S3);
        assert_eq!(
            c.spatial_sizes().unwrap(),
            [(56, 56), (56, 56), (28, 28), (14, 14), (7, 7)]
        );
        assert_eq!(c.se_channels(), Some(128));
        assert_eq!(c.feature_dim(), 512);
    }

    #[test]
    fn tiny_scale_widths() {
        let c = ModelConfig::tiny(4, SeScheme::S1);
        assert_eq!(c.stage_widths(), [16, 32, 64, 128]);
        assert_eq!(c.se_channels(), Some(16));
        assert_eq!(c.spatial_sizes().unwrap()[4], (4, 4));
    }

    #[test]
    fn scheme_spellings() {
        assert_eq!("3".parse::<SeScheme>().unwrap(), SeScheme::S3);
        assert_eq!("ResNet".parse::<SeScheme>().unwrap(), SeScheme::None);
        assert_eq!(SeScheme::S2.number(), Some(2));
        assert_eq!(SeScheme::None.number(), None);
        assert!("s5".parse::<SeScheme>().is_err());
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        let mut c = ModelConfig::tiny(2, SeScheme::None);
        c.stem_channels = 30;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::tiny(2, SeScheme::None);
        c.blocks_per_stage = [2, 0, 2, 2];
        assert!(c.validate().is_err());
        let mut c = ModelConfig::tiny(0, SeScheme::None);
        assert!(c.validate().is_err());
        c.num_classes = 2;
        c.input_size = (0, 8);
        assert!(c.validate().is_err());
    }
}
