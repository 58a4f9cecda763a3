use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use crate::data::{augment, derive_seed, AugmentSpec, Image, LabeledDataset, Rng, Standardization};
use crate::error::{Error, Result};
use crate::model::{Mode, Model};
use crate::nn::Module;
use crate::tensor::{ops, Tape, Tensor};

const SHUFFLE_STREAM: u64 = 0x5348_5546;

/// Learning-rate schedule; only `Constant` is used unless configured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Multiply by `factor` every `every` epochs.
    Step { every: usize, factor: f64 },
}

impl LrSchedule {
    pub fn lr_at(&self, base: f64, epoch: usize) -> f64 {
        match *self {
            LrSchedule::Constant => base,
            LrSchedule::Step { every, factor } => base * factor.powi((epoch / every.max(1)) as i32),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub shuffle: bool,
    #[serde(default)]
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 50,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            schedule: LrSchedule::Constant,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if let LrSchedule::Step { every, factor } = self.schedule {
            if every == 0 || factor.is_nan() || factor <= 0.0 {
                return Err(Error::Config(
                    "step schedule needs every >= 1 and factor > 0".into(),
                ));
            }
        }
        self.adam.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,test_acc,seconds";

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs
            .iter()
            .fold(None, |best: Option<&EpochRecord>, e| match best {
                Some(b) if b.test_acc >= e.test_acc => Some(b),
                _ => Some(e),
            })
    }

    pub fn final_test_acc(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.test_acc)
    }

    /// Floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch, e.train_loss, e.train_acc, e.test_acc, e.seconds
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != Self::CSV_HEADER {
            return Err(Error::Format(format!(
                "unexpected history header {header:?}"
            )));
        }
        let mut epochs = Vec::new();
        for row in reader.records() {
            let row = row?;
            let num = |i: usize| -> Result<f64> {
                row[i]
                    .parse()
                    .map_err(|_| Error::Format(format!("bad number `{}` in history", &row[i])))
            };
            epochs.push(EpochRecord {
                epoch: num(0)? as usize,
                train_loss: num(1)?,
                train_acc: num(2)?,
                test_acc: num(3)?,
                seconds: num(4)?,
            });
        }
        Ok(Self { epochs })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-row argmax of `[N, K]` logits.
pub fn predictions(logits: &Tensor) -> Vec<usize> {
    let k = logits.shape()[1];
    logits.data().chunks(k).map(argmax).collect()
}

/// Fraction of items whose argmax prediction equals the label. The model
/// runs in inference mode and is returned to its previous mode afterwards.
/// Images are fed as stored; standardize beforehand if the model expects it.
pub fn evaluate(model: &mut Model, dataset: &LabeledDataset, batch_size: usize) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Contract(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let previous = model.mode();
    model.set_mode(Mode::Inference);
    let result = (|| {
        let mut correct = 0usize;
        let indices: Vec<usize> = (0..dataset.len()).collect();
        for chunk in indices.chunks(batch_size.max(1)) {
            let (batch, labels) = dataset.batch(chunk)?;
            let preds = predictions(&model.forward(&batch)?);
            correct += preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
        }
        Ok(correct as f64 / dataset.len() as f64)
    })();
    model.set_mode(previous);
    result
}

/// Training loop: seeded shuffling, optional per-item augmentation (applied
/// to `[0, 1]` images before standardization), Adam steps, and a held-out
/// evaluation after every epoch.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub config: TrainConfig,
    pub standardization: Standardization,
    pub augment: Option<AugmentSpec>,
    /// Where the best-test-accuracy checkpoint is written.
    pub checkpoint: Option<PathBuf>,
    /// Threads used for batch augmentation; `None` runs inline.
    pub workers: Option<usize>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Self {
        Self {
            config,
            standardization: Standardization::identity(),
            augment: None,
            checkpoint: None,
            workers: None,
        }
    }

    fn prepare(&self, image: &Image, epoch: usize, index: usize) -> Image {
        let mut img = match &self.augment {
            Some(spec) => augment(
                image,
                spec,
                derive_seed(self.config.seed, &[epoch as u64, index as u64]),
            ),
            None => image.clone(),
        };
        self.standardization.apply(&mut img);
        img
    }

    fn assemble(
        &self,
        ds: &LabeledDataset,
        indices: &[usize],
        epoch: usize,
        pool: Option<&rayon::ThreadPool>,
    ) -> Result<(Tensor, Vec<usize>)> {
        let items = ds.items();
        let work = |&i: &usize| self.prepare(&items[i].image, epoch, i);
        let images: Vec<Image> = match pool {
            Some(pool) => pool.install(|| indices.par_iter().map(work).collect()),
            None => indices.iter().map(work).collect(),
        };
        let refs: Vec<&Image> = images.iter().collect();
        let labels = indices.iter().map(|&i| items[i].label).collect();
        Ok((Image::stack(&refs)?, labels))
    }

    /// Trains `model` in place and returns the per-epoch history. Both
    /// datasets hold raw `[0, 1]` images; the test set is standardized once.
    pub fn train(
        &self,
        model: &mut Model,
        train_set: &LabeledDataset,
        test_set: &LabeledDataset,
    ) -> Result<History> {
        self.config.validate()?;
        self.standardization.validate()?;
        if let Some(spec) = &self.augment {
            spec.validate()?;
        }
        if train_set.is_empty() || test_set.is_empty() {
            return Err(Error::Contract(format!(
                "training needs non-empty datasets (train {}, test {})",
                train_set.len(),
                test_set.len()
            )));
        }
        let pool = match self.workers {
            Some(n) if n > 1 => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?,
            ),
            _ => None,
        };
        let mut test = test_set.clone();
        self.standardization.apply_dataset(&mut test);

        let cfg = &self.config;
        let mut adam = AdamState::new();
        let mut history = History::default();
        let mut best_acc = f64::NEG_INFINITY;
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        model.set_mode(Mode::Training);

        for epoch in 1..=cfg.epochs {
            let started = Instant::now();
            if cfg.shuffle {
                Rng::derived(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]).shuffle(&mut order);
            }
            let lr = cfg.schedule.lr_at(cfg.adam.lr, epoch - 1);
            let (mut loss_sum, mut correct) = (0.0, 0usize);
            for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
                let (batch, labels) = self.assemble(train_set, chunk, epoch, pool.as_ref())?;
                let tape = Tape::new();
                let fwd = model.forward_train(&batch, &tape)?;
                let loss = ops::cross_entropy(&fwd.logits, &labels)?;
                let value = loss.item()?;
                if !value.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        batch: b + 1,
                        loss: value,
                    });
                }
                loss.backward()?;
                model.apply_grads(&fwd.bindings);
                adam.step_with_lr(&mut model.params_mut(), &cfg.adam, lr)?;
                loss_sum += value * chunk.len() as f64;
                correct += predictions(&fwd.logits)
                    .iter()
                    .zip(&labels)
                    .filter(|(p, l)| p == l)
                    .count();
            }
            model.zero_grads();
            let test_acc = evaluate(model, &test, cfg.batch_size)?;
            let record = EpochRecord {
                epoch,
                train_loss: loss_sum / train_set.len() as f64,
                train_acc: correct as f64 / train_set.len() as f64,
                test_acc,
                seconds: started.elapsed().as_secs_f64(),
            };
            log::info!(
                "epoch {epoch}/{}: loss {:.4} train {:.3} test {:.3} ({:.1}s)",
                cfg.epochs,
                record.train_loss,
                record.train_acc,
                record.test_acc,
                record.seconds
            );
            if test_acc > best_acc {
                best_acc = test_acc;
                if let Some(path) = &self.checkpoint {
                    model.save_with(path, Some(self.standardization.clone()))?;
                }
            }
            history.epochs.push(record);
        }
        Ok(history)
    }
}
