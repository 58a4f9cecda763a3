use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// An RGB image stored channel-major (`[3, H, W]`), values nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image size {height}x{width} is empty"
            )));
        }
        if data.len() != 3 * height * width {
            return Err(Error::Dimension(format!(
                "image {height}x{width} needs {} values, got {}",
                3 * height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        let plane = height * width;
        let data = (0..3 * plane).map(|i| rgb[i / plane]).collect();
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(&[1, 3, self.height, self.width], self.data.clone()).expect("image shape")
    }

    /// Stacks equally sized images into a `[N, 3, H, W]` batch.
    pub fn stack(images: &[&Image]) -> Result<Tensor> {
        let first = images
            .first()
            .ok_or_else(|| Error::Dimension("cannot stack an empty image list".into()))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(images.len() * 3 * h * w);
        for img in images {
            if (img.height, img.width) != (h, w) {
                return Err(Error::Dimension(format!(
                    "cannot stack {}x{} with {h}x{w}",
                    img.height, img.width
                )));
            }
            data.extend_from_slice(&img.data);
        }
        Tensor::new(&[images.len(), 3, h, w], data)
    }

    /// Parses binary PPM (P6). Maxval up to 65535; 16-bit samples are big-endian.
    pub fn decode_ppm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let bad = |m: &str| Error::Format(format!("PPM: {m}"));
        if bytes.len() < 2 || &bytes[..2] != b"P6" {
            return Err(bad("missing P6 magic"));
        }
        pos += 2;
        let mut fields = [0usize; 3];
        for field in &mut fields {
            loop {
                match bytes.get(pos) {
                    Some(b) if b.is_ascii_whitespace() => pos += 1,
                    Some(b'#') => {
                        while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                            pos += 1;
                        }
                    }
                    _ => break,
                }
            }
            let start = pos;
            while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
                pos += 1;
            }
            if start == pos {
                return Err(bad("malformed header"));
            }
            *field = std::str::from_utf8(&bytes[start..pos])
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("header number out of range"))?;
        }
        if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(bad("header must end in a single whitespace byte"));
        }
        pos += 1;
        let [width, height, maxval] = fields;
        if width == 0 || height == 0 {
            return Err(bad("zero image dimension"));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maxval must be in 1..=65535"));
        }
        let sample = if maxval > 255 { 2 } else { 1 };
        let n = width * height * 3;
        let body = &bytes[pos..];
        if body.len() < n * sample {
            return Err(Error::Truncated(format!(
                "PPM body has {} of {} bytes",
                body.len(),
                n * sample
            )));
        }
        let scale = maxval as f64;
        let plane = width * height;
        let mut data = vec![0.0; n];
        for i in 0..n {
            let raw = if sample == 1 {
                usize::from(body[i])
            } else {
                usize::from(u16::from_be_bytes([body[2 * i], body[2 * i + 1]]))
            };
            if raw > maxval {
                return Err(bad("sample exceeds maxval"));
            }
            let (pixel, c) = (i / 3, i % 3);
            data[c * plane + pixel] = raw as f64 / scale;
        }
        Self::new(height, width, data)
    }

    /// 8-bit P6; values are clamped to `[0, 1]` and rounded to the nearest level.
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        let plane = self.height * self.width;
        out.reserve(3 * plane);
        for p in 0..plane {
            for c in 0..3 {
                out.push((self.data[c * plane + p].clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }

    pub fn read_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_ppm(&bytes)
    }

    pub fn write_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode_ppm()).map_err(|e| Error::io(path, e))
    }
}
