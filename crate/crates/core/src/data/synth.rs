use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dataset::{Item, LabeledDataset};
use super::image::Image;
use super::rng::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotifFamily {
    Stripes,
    Checks,
    Dots,
    Zigzag,
}

impl MotifFamily {
    pub const ALL: [MotifFamily; 4] = [
        MotifFamily::Stripes,
        MotifFamily::Checks,
        MotifFamily::Dots,
        MotifFamily::Zigzag,
    ];
}

impl fmt::Display for MotifFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotifFamily::Stripes => "stripes",
            MotifFamily::Checks => "checks",
            MotifFamily::Dots => "dots",
            MotifFamily::Zigzag => "zigzag",
        })
    }
}

impl FromStr for MotifFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotifFamily::ALL
            .into_iter()
            .find(|m| m.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown motif `{s}` (valid: stripes, checks, dots, zigzag)"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Motif {
    pub family: MotifFamily,
    /// Pattern repeats across the image width.
    pub frequency: f64,
    /// Pattern orientation in degrees.
    pub orientation: f64,
    /// Background, primary and accent colours.
    pub palette: [[f64; 3]; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub size: usize,
    pub motifs: Vec<Motif>,
    /// Half-width of the uniform pixel noise.
    pub noise: f64,
    pub seed: u64,
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match sector as u8 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

impl Motif {
    /// Default motif for class `c`: families cycle, frequency and
    /// orientation step per cycle, hues follow the golden-ratio sequence.
    pub fn for_class(c: usize) -> Self {
        let family = MotifFamily::ALL[c % 4];
        let cycle = c / 4;
        let hue = (c as f64 * 0.618_033_988_749_894_9).fract();
        Self {
            family,
            frequency: 3.0 + cycle as f64,
            orientation: ((c * 37) % 180) as f64,
            palette: [
                hsv(hue, 0.35, 0.95),
                hsv(hue, 0.85, 0.75),
                hsv(hue + 0.5, 0.7, 0.35),
            ],
        }
    }

    /// Palette index at normalized coordinates `(u, v)` in `[0, 1)`.
    fn index(&self, u: f64, v: f64, phase: (f64, f64)) -> usize {
        let (sin, cos) = self.orientation.to_radians().sin_cos();
        let s = self.frequency * (u * cos + v * sin) + phase.0;
        let t = self.frequency * (-u * sin + v * cos) + phase.1;
        match self.family {
            MotifFamily::Stripes => (s.floor() as i64).rem_euclid(3) as usize,
            MotifFamily::Checks => {
                let parity = (s.floor() as i64 + t.floor() as i64).rem_euclid(2) as usize;
                if (s.fract().abs() - 0.5).abs() > 0.45 {
                    2
                } else {
                    parity
                }
            }
            MotifFamily::Dots => {
                let (ds, dt) = (s - s.floor() - 0.5, t - t.floor() - 0.5);
                let r = (ds * ds + dt * dt).sqrt();
                if r < 0.22 {
                    1
                } else if r < 0.32 {
                    2
                } else {
                    0
                }
            }
            MotifFamily::Zigzag => {
                let tri = 2.0 * (t - (t + 0.5).floor()).abs();
                let z = s + 0.8 * tri;
                (z.floor() as i64).rem_euclid(3) as usize
            }
        }
    }
}

impl SynthSpec {
    pub fn new(num_classes: usize, per_class: usize, size: usize, seed: u64) -> Self {
        Self {
            num_classes,
            per_class,
            size,
            motifs: (0..num_classes).map(Motif::for_class).collect(),
            noise: 0.05,
            seed,
        }
    }

    /// Smallest per-channel palette gap between any two classes.
    pub fn inter_class_contrast(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.motifs.iter().enumerate() {
            for b in &self.motifs[i + 1..] {
                let gap = a
                    .palette
                    .iter()
                    .flatten()
                    .zip(b.palette.iter().flatten())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                best = best.min(gap);
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_classes == 0 || self.per_class == 0 || self.size == 0 {
            return bad(format!(
                "classes ({}), per-class ({}) and size ({}) must be positive",
                self.num_classes, self.per_class, self.size
            ));
        }
        if self.motifs.len() != self.num_classes {
            return bad(format!(
                "{} motifs for {} classes",
                self.motifs.len(),
                self.num_classes
            ));
        }
        for (i, a) in self.motifs.iter().enumerate() {
            if !(a.frequency > 0.0 && a.frequency.is_finite() && a.orientation.is_finite()) {
                return bad(format!(
                    "class {i}: frequency must be positive and orientation finite"
                ));
            }
            for (j, b) in self.motifs.iter().enumerate().skip(i + 1) {
                if a.family == b.family
                    && a.frequency == b.frequency
                    && a.orientation == b.orientation
                {
                    return bad(format!(
                        "classes {i} and {j} share motif ({}, {}, {})",
                        a.family, a.frequency, a.orientation
                    ));
                }
            }
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad(format!("noise amplitude {} must lie in [0, 1)", self.noise));
        }
        if self.num_classes > 1 && self.noise >= self.inter_class_contrast() {
            return bad(format!(
                "noise amplitude {} is not below the inter-class contrast {:.4}",
                self.noise,
                self.inter_class_contrast()
            ));
        }
        Ok(())
    }

    pub fn class_name(&self, c: usize) -> String {
        format!("c{c}-{}", self.motifs[c].family)
    }

    /// One image: a phase-shifted motif plus uniform noise, each image from
    /// its own sub-stream of `seed`.
    pub fn render(&self, class: usize, index: usize) -> Image {
        let motif = &self.motifs[class];
        let mut rng = Rng::derived(self.seed, &[class as u64, index as u64]);
        let phase = (rng.uniform(), rng.uniform());
        let n = self.size;
        let mut img = Image::filled(n, n, [0.0; 3]);
        for y in 0..n {
            for x in 0..n {
                let k = motif.index(x as f64 / n as f64, y as f64 / n as f64, phase);
                for c in 0..3 {
                    img.set(c, y, x, motif.palette[k][c]);
                }
            }
        }
        if self.noise > 0.0 {
            for v in img.data_mut() {
                *v = (*v + rng.range(-self.noise, self.noise)).clamp(0.0, 1.0);
            }
        }
        img
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        self.validate()?;
        let mut items = Vec::with_capacity(self.num_classes * self.per_class);
        for class in 0..self.num_classes {
            for index in 0..self.per_class {
                items.push(Item {
                    image: self.render(class, index),
                    label: class,
                    source: format!("synth/{}/{index:04}", self.class_name(class)),
                });
            }
        }
        LabeledDataset::new(
            items,
            (0..self.num_classes).map(|c| self.class_name(c)).collect(),
        )
    }

    /// Writes `root/<class>/<index>.ppm` (8-bit, so values are quantized).
    pub fn write_tree(&self, root: impl AsRef<Path>) -> Result<LabeledDataset> {
        let root = root.as_ref();
        let ds = self.generate()?;
        for item in ds.items() {
            let (class, file) = item
                .source
                .trim_start_matches("synth/")
                .split_once('/')
                .expect("synth source id");
            let dir = root.join(class);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            item.image.write_ppm(dir.join(format!("{file}.ppm")))?;
        }
        Ok(ds)
    }
}
