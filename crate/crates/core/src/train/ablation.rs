use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::trainer::{History, Trainer};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, SeScheme};

#[derive(Clone, Debug)]
pub struct AblationEntry {
    pub scheme: SeScheme,
    /// Final-epoch held-out accuracy in `[0, 1]`.
    pub accuracy: f64,
    pub history: History,
}

/// Per-scheme results laid out as a two-row table: a `Scheme` header row
/// and a `Precision /%` row holding held-out accuracy in percent.
#[derive(Clone, Debug, Default)]
pub struct AblationReport {
    pub entries: Vec<AblationEntry>,
}

impl AblationReport {
    pub const ROW_LABEL: &'static str = "Precision /%";

    pub fn labels(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| match e.scheme.number() {
                Some(n) => format!("Scheme {n}"),
                None => "ResNet-18".to_string(),
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("Scheme");
        for label in self.labels() {
            let _ = write!(out, ",{label}");
        }
        out.push('\n');
        out.push_str(Self::ROW_LABEL);
        for e in &self.entries {
            let _ = write!(out, ",{:.1}", 100.0 * e.accuracy);
        }
        out.push('\n');
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Trains one fresh model per scheme from the same seed and trainer
/// settings, so parameters outside the SE block start identical.
pub fn ablate(
    base: &ModelConfig,
    trainer: &Trainer,
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    schemes: &[SeScheme],
    seed: u64,
) -> Result<AblationReport> {
    if schemes.is_empty() {
        return Err(Error::Config("ablation needs at least one scheme".into()));
    }
    let mut report = AblationReport::default();
    for &scheme in schemes {
        log::info!("ablation: scheme {scheme} ({})", scheme.boundary());
        let config = ModelConfig {
            se_scheme: scheme,
            ..base.clone()
        };
        let mut model = Model::build(config, seed)?;
        let history = trainer.train(&mut model, train_set, test_set)?;
        report.entries.push(AblationEntry {
            scheme,
            accuracy: history.final_test_acc().unwrap_or(0.0),
            history,
        });
    }
    Ok(report)
}
