use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{cosine, euclidean, l2_normalize, manhattan};
use super::prototype::Prototype;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub class: String,
    pub euclidean: f64,
    pub manhattan: f64,
    pub cosine: f64,
}

/// Distances and cosine similarity of every prototype to a reference class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub reference: String,
    /// Reference row first, then the remaining classes in prototype order.
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "class,euclidean,manhattan,cosine";

fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

/// Builds the report against `reference`. With `normalize`, every prototype
/// is scaled to unit L2 norm first.
pub fn reference_report(
    prototypes: &[Prototype],
    reference: &str,
    normalize: bool,
) -> Result<SimilarityReport> {
    let r = prototypes
        .iter()
        .position(|p| p.class == reference)
        .ok_or_else(|| Error::UnknownClass {
            name: reference.to_string(),
            available: prototypes.iter().map(|p| p.class.clone()).collect(),
        })?;
    let vectors: Vec<Vec<f64>> = prototypes
        .iter()
        .map(|p| {
            if normalize {
                l2_normalize(&p.v)
            } else {
                Ok(p.v.clone())
            }
        })
        .collect::<Result<_>>()?;
    let order = std::iter::once(r).chain((0..prototypes.len()).filter(|&i| i != r));
    let rows = order
        .map(|i| {
            let (x, y) = (&vectors[r], &vectors[i]);
            Ok(ReportRow {
                class: prototypes[i].class.clone(),
                euclidean: euclidean(x, y)?,
                manhattan: manhattan(x, y)?,
                cosine: cosine(x, y)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SimilarityReport {
        reference: reference.to_string(),
        rows,
    })
}

impl SimilarityReport {
    pub fn row(&self, class: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.class == class)
    }

    /// Four decimals per value; negative zero prints as `0.0000`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_field(&r.class),
                fixed4(r.euclidean),
                fixed4(r.manhattan),
                fixed4(r.cosine)
            );
        }
        out
    }

    /// Parses CSV written by [`SimilarityReport::to_csv`]; the first row is the reference.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::Format(format!(
                "expected header `{CSV_HEADER}`, got {header:?}"
            )));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad value in report row {:?}", rec)))
            };
            rows.push(ReportRow {
                class: rec[0].to_string(),
                euclidean: num(1)?,
                manhattan: num(2)?,
                cosine: num(3)?,
            });
        }
        let reference = rows
            .first()
            .map(|r| r.class.clone())
            .ok_or_else(|| Error::Format("report CSV has no rows".into()))?;
        Ok(Self { reference, rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
