use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::{ReportRow, SimilarityReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Cosine,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Euclidean, Metric::Manhattan, Metric::Cosine];

    pub fn value(self, row: &ReportRow) -> f64 {
        match self {
            Metric::Euclidean => row.euclidean,
            Metric::Manhattan => row.manhattan,
            Metric::Cosine => row.cosine,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown metric `{s}` (valid: euclidean, manhattan, cosine)"
                ))
            })
    }
}

pub type Rgb = [u8; 3];

pub fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

pub fn parse_hex(s: &str) -> Result<Rgb> {
    let digits = s.strip_prefix('#').unwrap_or(s);
    let bad = || Error::Config(format!("`{s}` is not a #rrggbb colour"));
    if digits.len() != 6 || !digits.is_ascii() {
        return Err(bad());
    }
    let channel = |i: usize| u8::from_str_radix(&digits[2 * i..2 * i + 2], 16).map_err(|_| bad());
    Ok([channel(0)?, channel(1)?, channel(2)?])
}

/// Linear per-channel interpolation between two anchors over `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub metric: Metric,
    pub domain: (f64, f64),
    pub low: Rgb,
    pub high: Rgb,
}

pub const DEFAULT_LOW: Rgb = [0xf7, 0xf4, 0xe9];
pub const DEFAULT_HIGH: Rgb = [0x8c, 0x1c, 0x13];

impl ColorScale {
    pub fn new(metric: Metric, domain: (f64, f64), low: Rgb, high: Rgb) -> Result<Self> {
        let (min, max) = domain;
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Config(format!(
                "colour domain [{min}, {max}] must satisfy min < max"
            )));
        }
        Ok(Self {
            metric,
            domain,
            low,
            high,
        })
    }

    /// `[-1, 1]` for cosine; `[0, observed max]` for distances (falling
    /// back to `[0, 1]` when every distance is zero).
    pub fn default_for(metric: Metric, report: &SimilarityReport) -> Self {
        let domain = match metric {
            Metric::Cosine => (-1.0, 1.0),
            _ => {
                let max = report
                    .rows
                    .iter()
                    .map(|r| metric.value(r))
                    .fold(0.0, f64::max);
                (0.0, if max > 0.0 { max } else { 1.0 })
            }
        };
        Self {
            metric,
            domain,
            low: DEFAULT_LOW,
            high: DEFAULT_HIGH,
        }
    }

    /// Colour for `value` and whether it had to be clamped into the domain.
    pub fn color(&self, value: f64) -> (Rgb, bool) {
        let (min, max) = self.domain;
        let clamped = value.clamp(min, max);
        let t = (clamped - min) / (max - min);
        let out = std::array::from_fn(|c| {
            let (a, b) = (f64::from(self.low[c]), f64::from(self.high[c]));
            (a + t * (b - a)).round().clamp(0.0, 255.0) as u8
        });
        (out, clamped != value)
    }

    /// Five evenly spaced legend values from min to max.
    pub fn ticks(&self) -> [f64; 5] {
        let (min, max) = self.domain;
        std::array::from_fn(|k| {
            if k == 4 {
                max
            } else {
                min + (max - min) * k as f64 / 4.0
            }
        })
    }
}
