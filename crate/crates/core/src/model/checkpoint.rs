//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! | offset     | size | content                                  |
//! |------------|------|------------------------------------------|
//! | 0          | 8    | magic `SRN18CKP`                         |
//! | 8          | 4    | format version (u32, currently 1)        |
//! | 12         | 4    | header length `L` in bytes (u32)         |
//! | 16         | L    | UTF-8 JSON header                        |
//! | 16 + L     | ...  | payload: f64 little-endian tensor data   |
//!
//! The header lists the model config, optional input standardization, and a
//! tensor directory of `{name, kind, dtype, shape, offset}` entries where
//! `offset` is a byte offset into the payload.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::resnet::Model;
use crate::data::Standardization;
use crate::error::{Error, Result};
use crate::nn::Module;

pub const MAGIC: &[u8; 8] = b"SRN18CKP";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    Param,
    RunningMean,
    RunningVar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub kind: TensorKind,
    pub dtype: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

impl TensorEntry {
    fn elements(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub config: ModelConfig,
    #[serde(default)]
    pub standardization: Option<Standardization>,
    pub tensors: Vec<TensorEntry>,
    pub payload_bytes: u64,
}

/// A parsed checkpoint held in memory.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    header: Header,
    payload: Vec<u8>,
}

impl Checkpoint {
    /// Snapshot of every parameter and running statistic of `model`.
    pub fn capture(model: &Model, standardization: Option<Standardization>) -> Self {
        let mut tensors = Vec::new();
        let mut payload = Vec::new();
        let mut push = |name: String, kind, shape: Vec<usize>, values: &[f64]| {
            tensors.push(TensorEntry {
                name,
                kind,
                dtype: "f64".to_string(),
                shape,
                offset: payload.len() as u64,
            });
            for v in values {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        };
        for p in model.params() {
            push(
                p.name().to_string(),
                TensorKind::Param,
                p.shape().to_vec(),
                p.values(),
            );
        }
        for bn in model.batch_norms() {
            let c = bn.channels();
            push(
                format!("{}.running_mean", bn.name()),
                TensorKind::RunningMean,
                vec![c],
                &bn.running.mean,
            );
            push(
                format!("{}.running_var", bn.name()),
                TensorKind::RunningVar,
                vec![c],
                &bn.running.var,
            );
        }
        let header = Header {
            format_version: FORMAT_VERSION,
            config: model.config().clone(),
            standardization,
            tensors,
            payload_bytes: payload.len() as u64,
        };
        Self { header, payload }
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn config(&self) -> &ModelConfig {
        &self.header.config
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.header.standardization.as_ref()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let header_len = u32::try_from(header.len())
            .map_err(|_| Error::Format("header exceeds 4 GiB".to_string()))?;
        let mut out = Vec::with_capacity(PREAMBLE + header.len() + self.payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() {
            return Err(Error::Truncated(format!("{} bytes, no magic", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("bad magic bytes".to_string()));
        }
        if bytes.len() < PREAMBLE {
            return Err(Error::Truncated("preamble cut short".to_string()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let header_end = PREAMBLE + header_len;
        if bytes.len() < header_end {
            return Err(Error::Truncated(format!(
                "header declares {header_len} bytes, file has {}",
                bytes.len() - PREAMBLE
            )));
        }
        let header: Header = serde_json::from_slice(&bytes[PREAMBLE..header_end])
            .map_err(|e| Error::Format(format!("header JSON: {e}")))?;
        if header.format_version != version {
            return Err(Error::Format(format!(
                "header version {} disagrees with preamble version {version}",
                header.format_version
            )));
        }
        let payload = &bytes[header_end..];
        if (payload.len() as u64) < header.payload_bytes {
            return Err(Error::Truncated(format!(
                "payload has {} of {} bytes",
                payload.len(),
                header.payload_bytes
            )));
        }
        for t in &header.tensors {
            if t.dtype != "f64" {
                return Err(Error::Format(format!(
                    "tensor {}: unsupported dtype {}",
                    t.name, t.dtype
                )));
            }
            let end = t.offset + 8 * t.elements() as u64;
            if end > header.payload_bytes {
                return Err(Error::Truncated(format!(
                    "tensor {} runs past the payload",
                    t.name
                )));
            }
        }
        Ok(Self {
            payload: payload[..header.payload_bytes as usize].to_vec(),
            header,
        })
    }

    fn values(&self, entry: &TensorEntry) -> Vec<f64> {
        let start = entry.offset as usize;
        self.payload[start..start + 8 * entry.elements()]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    }

    fn directory(&self) -> BTreeMap<&str, &TensorEntry> {
        self.header
            .tensors
            .iter()
            .map(|t| (t.name.as_str(), t))
            .collect()
    }
}

/// Which tensors a transfer load took from the checkpoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferReport {
    pub loaded: Vec<String>,
    pub fresh: Vec<String>,
}

/// Every tensor slot of a model, as (name, expected shape).
fn slots(model: &Model) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<_> = model
        .params()
        .into_iter()
        .map(|p| (p.name().to_string(), p.shape().to_vec()))
        .collect();
    for bn in model.batch_norms() {
        let c = bn.channels();
        out.push((format!("{}.running_mean", bn.name()), vec![c]));
        out.push((format!("{}.running_var", bn.name()), vec![c]));
    }
    out
}

fn write_slot(model: &mut Model, name: &str, values: Vec<f64>) -> Result<()> {
    if let Some(p) = model.params_mut().into_iter().find(|p| p.name() == name) {
        return p.set_values(values);
    }
    for bn in model.batch_norms_mut() {
        if name == format!("{}.running_mean", bn.name()) {
            bn.running.mean = values;
            return Ok(());
        }
        if name == format!("{}.running_var", bn.name()) {
            bn.running.var = values;
            return Ok(());
        }
    }
    Err(Error::ShapeMismatch(format!(
        "model has no tensor named {name}"
    )))
}

fn is_classifier(name: &str) -> bool {
    name.starts_with("fc.")
}

fn is_se(name: &str) -> bool {
    name.starts_with("se.")
}

impl Model {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with(path, None)
    }

    pub fn save_with(
        &self,
        path: impl AsRef<Path>,
        standardization: Option<Standardization>,
    ) -> Result<()> {
        Checkpoint::capture(self, standardization).write(path)
    }

    /// Loads a checkpoint saved from a model with exactly `config`.
    pub fn load(path: impl AsRef<Path>, config: &ModelConfig) -> Result<Self> {
        let ckpt = Checkpoint::read(path)?;
        let mut model = Model::build(config.clone(), 0)?;
        model.load_weights(&ckpt)?;
        model.set_mode(super::Mode::Inference);
        Ok(model)
    }

    /// Overwrites every tensor from `ckpt`. All checks run before the first
    /// write, so on error the model is unchanged.
    pub fn load_weights(&mut self, ckpt: &Checkpoint) -> Result<()> {
        if ckpt.config() != self.config() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint config {:?} differs from model config {:?}",
                ckpt.config(),
                self.config()
            )));
        }
        let dir = ckpt.directory();
        let slots = slots(self);
        for (name, shape) in &slots {
            let entry = dir
                .get(name.as_str())
                .ok_or_else(|| Error::ShapeMismatch(format!("checkpoint lacks tensor {name}")))?;
            if &entry.shape != shape {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {name}: checkpoint shape {:?}, model shape {shape:?}",
                    entry.shape
                )));
            }
        }
        if dir.len() != slots.len() {
            let known: Vec<&str> = slots.iter().map(|(n, _)| n.as_str()).collect();
            let extra: Vec<&str> = dir.keys().filter(|k| !known.contains(k)).copied().collect();
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has unknown tensors {extra:?}"
            )));
        }
        for (name, _) in slots {
            let values = ckpt.values(dir[name.as_str()]);
            write_slot(self, &name, values)?;
        }
        Ok(())
    }

    /// Transfer-learning load: builds a fresh model from `config` and `seed`,
    /// then copies every backbone tensor from the checkpoint. The classifier
    /// always stays freshly initialized; SE tensors are copied when the
    /// checkpoint has them with matching shapes.
    pub fn load_transfer(
        path: impl AsRef<Path>,
        config: &ModelConfig,
        seed: u64,
    ) -> Result<(Self, TransferReport)> {
        let ckpt = Checkpoint::read(path)?;
        let mut model = Model::build(config.clone(), seed)?;
        let report = model.load_backbone(&ckpt)?;
        Ok((model, report))
    }

    pub fn load_backbone(&mut self, ckpt: &Checkpoint) -> Result<TransferReport> {
        let stored = ckpt.config();
        let mine = self.config();
        if stored.scale != mine.scale
            || stored.stem_channels != mine.stem_channels
            || stored.blocks_per_stage != mine.blocks_per_stage
        {
            return Err(Error::ShapeMismatch(
                "backbone geometry (scale, widths, depth) differs from checkpoint".to_string(),
            ));
        }
        let dir = ckpt.directory();
        let mut report = TransferReport::default();
        let mut writes = Vec::new();
        for (name, shape) in slots(self) {
            if is_classifier(&name) {
                report.fresh.push(name);
                continue;
            }
            match dir.get(name.as_str()) {
                Some(e) if e.shape == shape => writes.push((name, *e)),
                Some(e) if !is_se(&name) => {
                    return Err(Error::ShapeMismatch(format!(
                        "tensor {name}: checkpoint shape {:?}, model shape {shape:?}",
                        e.shape
                    )))
                }
                None if !is_se(&name) => {
                    return Err(Error::ShapeMismatch(format!(
                        "checkpoint lacks tensor {name}"
                    )))
                }
                _ => report.fresh.push(name),
            }
        }
        for (name, entry) in writes {
            write_slot(self, &name, ckpt.values(entry))?;
            report.loaded.push(name);
        }
        Ok(report)
    }
}
