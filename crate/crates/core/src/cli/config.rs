use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::data::{AugmentSpec, SynthSpec};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Scale, SeScheme};
use crate::train::{AdamConfig, LrSchedule, TrainConfig};
use crate::viz::{parse_hex, Metric};

/// Fully resolved settings for one invocation. Sources, lowest precedence
/// first: built-in defaults, the `--config` file (a flat JSON object), then
/// command-line flags. The resolved value is echoed as `run-config.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: String,
    pub workers: usize,

    pub data: Option<String>,
    /// `KEY=VALUE` list: classes, per-class, size, noise.
    pub synth: Option<String>,
    pub train_fraction: f64,
    pub image_size: Option<usize>,

    pub model: Scale,
    pub scheme: SeScheme,
    pub se_reduction: Option<usize>,
    pub se_bias: bool,

    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub shuffle: bool,

    pub augment: bool,
    pub rotate: f64,
    pub zoom_min: f64,
    pub zoom_max: f64,
    pub translate: f64,
    pub flip: f64,

    pub schemes: String,

    pub checkpoint: Option<String>,
    pub split: Option<String>,
    pub reference: Option<String>,
    pub map: Option<String>,
    pub normalize: bool,

    pub report: Option<String>,
    pub metric: Option<String>,
    pub domain: Option<String>,
    pub low: String,
    pub high: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let aug = AugmentSpec::default();
        let (zoom_min, zoom_max) = aug.zoom.unwrap_or((1.0, 1.0));
        Self {
            seed: 0,
            out: "out".into(),
            workers: 1,
            data: None,
            synth: None,
            train_fraction: 0.7,
            image_size: None,
            model: Scale::Full,
            scheme: SeScheme::S3,
            se_reduction: None,
            se_bias: true,
            epochs: 50,
            batch_size: 64,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            shuffle: true,
            augment: false,
            rotate: aug.rotate.map_or(0.0, |r| r.1),
            zoom_min,
            zoom_max,
            translate: aug.translate.unwrap_or(0.0),
            flip: aug.flip.unwrap_or(0.0),
            schemes: "s1,s2,s3,s4".into(),
            checkpoint: None,
            split: None,
            reference: None,
            map: None,
            normalize: false,
            report: None,
            metric: None,
            domain: None,
            low: crate::viz::hex(crate::viz::DEFAULT_LOW),
            high: crate::viz::hex(crate::viz::DEFAULT_HIGH),
        }
    }
}

/// The merged key/value view plus which keys were set above the defaults.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub explicit: BTreeSet<String>,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Merges defaults, the optional config file and flag overrides.
pub fn resolve(config_file: Option<&Path>, flags: Map<String, Value>) -> Result<Resolved> {
    let Value::Object(mut merged) = serde_json::to_value(RunConfig::default())? else {
        unreachable!("RunConfig serializes to an object")
    };
    let mut explicit = BTreeSet::new();
    if let Some(path) = config_file {
        let text =
            fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let Value::Object(file) = value else {
            return Err(config_err(format!(
                "{}: expected a JSON object",
                path.display()
            )));
        };
        for (k, v) in file {
            if !merged.contains_key(&k) {
                return Err(config_err(format!("{}: unknown key `{k}`", path.display())));
            }
            if v.is_object() || v.is_array() {
                return Err(config_err(format!(
                    "{}: key `{k}` must hold a scalar",
                    path.display()
                )));
            }
            explicit.insert(k.clone());
            merged.insert(k, v);
        }
    }
    for (k, v) in flags {
        debug_assert!(merged.contains_key(&k), "flag key {k} is not a config key");
        explicit.insert(k.clone());
        merged.insert(k, v);
    }
    let config: RunConfig = serde_json::from_value(Value::Object(merged)).map_err(config_err)?;
    config.validate()?;
    Ok(Resolved { config, explicit })
}

/// Parses `KEY=VALUE` tokens (whitespace or comma separated) into a corpus spec.
pub fn parse_synth(text: &str, seed: u64) -> Result<SynthSpec> {
    let mut spec = SynthSpec::new(4, 50, 32, seed);
    let mut noise = None;
    for token in text.split([' ', ',']).filter(|t| !t.is_empty()) {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| config_err(format!("synth option `{token}` is not KEY=VALUE")))?;
        let int = || {
            value.parse::<usize>().map_err(|_| {
                config_err(format!(
                    "synth {key}: `{value}` is not a non-negative integer"
                ))
            })
        };
        match key {
            "classes" => spec.num_classes = int()?,
            "per-class" | "per_class" => spec.per_class = int()?,
            "size" => spec.size = int()?,
            "noise" => {
                noise =
                    Some(value.parse::<f64>().map_err(|_| {
                        config_err(format!("synth noise: `{value}` is not a number"))
                    })?)
            }
            other => {
                return Err(config_err(format!(
                    "unknown synth key `{other}` (valid: classes, per-class, size, noise)"
                )))
            }
        }
    }
    spec = SynthSpec {
        noise: noise.unwrap_or(spec.noise),
        ..SynthSpec::new(spec.num_classes, spec.per_class, spec.size, seed)
    };
    spec.validate()?;
    Ok(spec)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        self.augment_spec().validate()?;
        if self.workers == 0 {
            return Err(config_err("workers must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(config_err(format!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )));
        }
        if self.image_size == Some(0) {
            return Err(config_err("image_size must be positive"));
        }
        if self.se_reduction == Some(0) {
            return Err(config_err("se_reduction must be positive"));
        }
        if let Some(s) = &self.synth {
            parse_synth(s, self.seed)?;
        }
        if let Some(split) = &self.split {
            if !["train", "test", "all"].contains(&split.as_str()) {
                return Err(config_err(format!(
                    "split `{split}` must be train, test or all"
                )));
            }
        }
        self.scheme_list()?;
        self.metrics()?;
        self.domain_range()?;
        parse_hex(&self.low)?;
        parse_hex(&self.high)?;
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            seed: self.seed,
            shuffle: self.shuffle,
            schedule: LrSchedule::Constant,
        }
    }

    pub fn augment_spec(&self) -> AugmentSpec {
        AugmentSpec {
            resize: None,
            rotate: Some((-self.rotate, self.rotate)),
            zoom: Some((self.zoom_min, self.zoom_max)),
            translate: Some(self.translate),
            flip: Some(self.flip),
        }
    }

    pub fn synth_spec(&self) -> Result<Option<SynthSpec>> {
        self.synth
            .as_deref()
            .map(|s| parse_synth(s, self.seed))
            .transpose()
    }

    /// Model input size: explicit `image_size`, else the synthetic image
    /// size, else the scale's preset.
    pub fn input_size(&self) -> Result<(usize, usize)> {
        if let Some(s) = self.image_size {
            return Ok((s, s));
        }
        if let Some(spec) = self.synth_spec()? {
            return Ok((spec.size, spec.size));
        }
        Ok(ModelConfig::preset(self.model, 1, SeScheme::None).input_size)
    }

    pub fn model_config(&self, num_classes: usize, scheme: SeScheme) -> Result<ModelConfig> {
        let mut config = ModelConfig::preset(self.model, num_classes, scheme);
        config.input_size = self.input_size()?;
        if let Some(r) = self.se_reduction {
            config.se_reduction = r;
        }
        config.se_bias = self.se_bias;
        config.validate()?;
        Ok(config)
    }

    pub fn scheme_list(&self) -> Result<Vec<SeScheme>> {
        let list: Vec<SeScheme> = self
            .schemes
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(config_err(
                "schemes must name at least one of s1, s2, s3, s4",
            ));
        }
        Ok(list)
    }

    pub fn metrics(&self) -> Result<Vec<Metric>> {
        match &self.metric {
            None => Ok(Metric::ALL.to_vec()),
            Some(m) => m.split(',').map(str::parse).collect(),
        }
    }

    pub fn domain_range(&self) -> Result<Option<(f64, f64)>> {
        let Some(d) = &self.domain else {
            return Ok(None);
        };
        let parts: Vec<f64> = d
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| config_err(format!("domain `{d}` must be MIN,MAX")))?;
        match parts[..] {
            [lo, hi] if lo < hi => Ok(Some((lo, hi))),
            _ => Err(config_err(format!(
                "domain `{d}` must be MIN,MAX with MIN < MAX"
            ))),
        }
    }
}
