use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean feature vector of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub class: String,
    pub v: Vec<f64>,
    pub n: usize,
}

/// Elementwise mean. Deviations from the first vector are accumulated in
/// input order and divided once, then added back: `x0 + Σ(xi - x0) / N`.
/// The shift makes the mean of identical vectors exact and keeps the sum
/// small when features share a large common offset.
pub fn prototype<V: AsRef<[f64]>>(features: &[V], class: &str) -> Result<Prototype> {
    let first = features
        .first()
        .ok_or_else(|| Error::Contract(format!("class `{class}` has no feature vectors")))?;
    let shift = first.as_ref();
    let d = shift.len();
    let mut sum = vec![0.0; d];
    for (i, f) in features.iter().enumerate() {
        let f = f.as_ref();
        if f.len() != d {
            return Err(Error::Dimension(format!(
                "class `{class}`: feature {i} has dimension {}, expected {d}",
                f.len()
            )));
        }
        for ((s, x), x0) in sum.iter_mut().zip(f).zip(shift) {
            *s += x - x0;
        }
    }
    let n = features.len();
    let v: Vec<f64> = sum
        .iter()
        .zip(shift)
        .map(|(s, x0)| x0 + s / n as f64)
        .collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract(format!(
            "class `{class}` prototype is not finite"
        )));
    }
    Ok(Prototype {
        class: class.to_string(),
        v,
        n,
    })
}

/// One prototype per class from `[N, D]` features, in `class_names` order.
pub fn class_prototypes(
    features: &Tensor,
    labels: &[usize],
    class_names: &[String],
) -> Result<Vec<Prototype>> {
    let [n, d] = match *features.shape() {
        [n, d] => [n, d],
        ref s => {
            return Err(Error::Dimension(format!(
                "features must be [N, D], got {s:?}"
            )))
        }
    };
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} feature rows",
            labels.len()
        )));
    }
    let rows: Vec<&[f64]> = features.data().chunks(d.max(1)).collect();
    class_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let members: Vec<&[f64]> = labels
                .iter()
                .zip(&rows)
                .filter(|(&l, _)| l == c)
                .map(|(_, r)| *r)
                .collect();
            prototype(&members, name)
        })
        .collect()
}
