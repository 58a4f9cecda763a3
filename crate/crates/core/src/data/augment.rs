use serde::{Deserialize, Serialize};

use super::image::Image;
use super::rng::Rng;
use crate::error::{Error, Result};

/// Sampled augmentation chain. A `None` field disables that operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    /// Output `(H, W)`, applied first and deterministically.
    pub resize: Option<(usize, usize)>,
    /// Rotation angle range in degrees.
    pub rotate: Option<(f64, f64)>,
    /// Isotropic zoom factor range; > 1 magnifies.
    pub zoom: Option<(f64, f64)>,
    /// Maximum shift as a fraction of height and width.
    pub translate: Option<f64>,
    /// Probability of a horizontal flip.
    pub flip: Option<f64>,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            resize: None,
            rotate: Some((-30.0, 30.0)),
            zoom: Some((0.8, 1.2)),
            translate: Some(0.1),
            flip: Some(0.5),
        }
    }
}

/// One concrete draw from an [`AugmentSpec`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AugmentDraw {
    pub degrees: f64,
    pub zoom: f64,
    /// Shift in pixels along (x, y).
    pub shift: (f64, f64),
    pub flip: bool,
}

impl AugmentSpec {
    pub fn disabled() -> Self {
        Self {
            resize: None,
            rotate: None,
            zoom: None,
            translate: None,
            flip: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::disabled()
    }

    pub fn validate(&self) -> Result<()> {
        let range = |name: &str, (lo, hi): (f64, f64)| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} range [{lo}, {hi}] is empty or not finite"
                )))
            }
        };
        if let Some((h, w)) = self.resize {
            if h == 0 || w == 0 {
                return Err(Error::Config(format!(
                    "resize target {h}x{w} must be positive"
                )));
            }
        }
        if let Some(r) = self.rotate {
            range("rotate", r)?;
        }
        if let Some(z) = self.zoom {
            range("zoom", z)?;
            if z.0 <= 0.0 {
                return Err(Error::Config(format!(
                    "zoom factors must be positive, got {}",
                    z.0
                )));
            }
        }
        if let Some(t) = self.translate {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Config(format!(
                    "translate fraction {t} must lie in [0, 1)"
                )));
            }
        }
        if let Some(p) = self.flip {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "flip probability {p} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Draws parameters for an image of size `h x w` (post-resize). Draws
    /// happen in chain order and only for enabled operations.
    pub fn sample(&self, h: usize, w: usize, rng: &mut Rng) -> AugmentDraw {
        let mut draw = AugmentDraw {
            zoom: 1.0,
            ..AugmentDraw::default()
        };
        if let Some((lo, hi)) = self.rotate {
            draw.degrees = rng.range(lo, hi);
        }
        if let Some((lo, hi)) = self.zoom {
            draw.zoom = rng.range(lo, hi);
        }
        if let Some(t) = self.translate {
            let dx = rng.range(-t, t) * w as f64;
            let dy = rng.range(-t, t) * h as f64;
            draw.shift = (dx, dy);
        }
        if let Some(p) = self.flip {
            draw.flip = rng.bernoulli(p);
        }
        draw
    }
}

/// Applies the chain resize -> rotate -> zoom -> translate -> flip with
/// parameters drawn from `seed`. Output is clamped to `[0, 1]`.
pub fn augment(image: &Image, spec: &AugmentSpec, seed: u64) -> Image {
    let base = match spec.resize {
        Some((h, w)) => resize(image, h, w),
        None => image.clone(),
    };
    if spec.rotate.is_none()
        && spec.zoom.is_none()
        && spec.translate.is_none()
        && spec.flip.is_none()
    {
        return clamp(base);
    }
    let draw = spec.sample(base.height(), base.width(), &mut Rng::new(seed));
    clamp(apply_draw(&base, &draw))
}

/// Rotation, zoom and translation as one inverse-mapped bilinear warp about
/// the image centre, followed by an exact mirror when `flip` is set.
pub fn apply_draw(image: &Image, draw: &AugmentDraw) -> Image {
    let warped = if draw.degrees == 0.0 && draw.zoom == 1.0 && draw.shift == (0.0, 0.0) {
        image.clone()
    } else {
        let (h, w) = (image.height(), image.width());
        let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
        let (sin, cos) = axis_exact_sin_cos(draw.degrees);
        warp(image, h, w, |x, y| {
            // undo translate, then zoom, then rotate
            let (u, v) = (
                (x - draw.shift.0 - cx) / draw.zoom,
                (y - draw.shift.1 - cy) / draw.zoom,
            );
            (cos * u + sin * v + cx, -sin * u + cos * v + cy)
        })
    };
    if draw.flip {
        flip_horizontal(&warped)
    } else {
        warped
    }
}

/// sin/cos with exact values at multiples of 90 degrees.
fn axis_exact_sin_cos(degrees: f64) -> (f64, f64) {
    let quarter = degrees / 90.0;
    if quarter == quarter.round() {
        match (quarter as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        degrees.to_radians().sin_cos()
    }
}

fn clamp(mut image: Image) -> Image {
    for v in image.data_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    image
}

/// Builds an `h x w` image by sampling `src` bilinearly at `map(x, y)`,
/// replicating edge pixels outside the frame.
fn warp(src: &Image, h: usize, w: usize, map: impl Fn(f64, f64) -> (f64, f64)) -> Image {
    let mut out = Image::filled(h, w, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x as f64, y as f64);
            for c in 0..3 {
                out.set(c, y, x, bilinear(src, c, sx, sy));
            }
        }
    }
    out
}

fn bilinear(src: &Image, c: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (src.width() - 1) as f64);
    let y = y.clamp(0.0, (src.height() - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    if fx == 0.0 && fy == 0.0 {
        return src.get(c, y0, x0);
    }
    let top = src.get(c, y0, x0) * (1.0 - fx) + src.get(c, y0, x1) * fx;
    let bottom = src.get(c, y1, x0) * (1.0 - fx) + src.get(c, y1, x1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Bilinear resize with half-pixel centres; same-size input is returned unchanged.
pub fn resize(image: &Image, h: usize, w: usize) -> Image {
    if (image.height(), image.width()) == (h, w) {
        return image.clone();
    }
    let sy = image.height() as f64 / h as f64;
    let sx = image.width() as f64 / w as f64;
    warp(image, h, w, |x, y| {
        ((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5)
    })
}

pub fn rotate(image: &Image, degrees: f64) -> Image {
    apply_draw(
        image,
        &AugmentDraw {
            degrees,
            zoom: 1.0,
            ..AugmentDraw::default()
        },
    )
}

pub fn zoom(image: &Image, factor: f64) -> Image {
    apply_draw(
        image,
        &AugmentDraw {
            zoom: factor,
            ..AugmentDraw::default()
        },
    )
}

pub fn translate(image: &Image, dx: f64, dy: f64) -> Image {
    apply_draw(
        image,
        &AugmentDraw {
            zoom: 1.0,
            shift: (dx, dy),
            ..AugmentDraw::default()
        },
    )
}

pub fn flip_horizontal(image: &Image) -> Image {
    let mut out = image.clone();
    let w = image.width();
    for c in 0..3 {
        for y in 0..image.height() {
            for x in 0..w {
                out.set(c, y, x, image.get(c, y, w - 1 - x));
            }
        }
    }
    out
}
