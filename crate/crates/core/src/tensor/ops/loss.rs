use super::dims2;
use crate::error::{Error, Result};
use crate::tensor::tape::record;
use crate::tensor::Tensor;

/// `log Σ exp(row)` with the row maximum shifted out.
pub fn logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + row.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean over the batch of `-x[label] + logsumexp(x)` for logits `[N, K]`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<Tensor> {
    let [n, k] = dims2(logits, "cross_entropy logits")?;
    if n == 0 || k == 0 {
        return Err(Error::Dimension(format!(
            "cross_entropy on empty logits [{n}, {k}]"
        )));
    }
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} logit rows",
            labels.len()
        )));
    }
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::Contract(format!(
            "label {l} at index {i} is outside [0, {k})"
        )));
    }
    let x = logits.data();
    let mut total = 0.0;
    // softmax rows, kept for the backward pass
    let mut probs = vec![0.0; n * k];
    for (i, &label) in labels.iter().enumerate() {
        let row = &x[i * k..(i + 1) * k];
        let lse = logsumexp(row);
        total += lse - row[label];
        for j in 0..k {
            probs[i * k + j] = (row[j] - lse).exp();
        }
    }
    let labels = labels.to_vec();
    record(&[logits], vec![1], vec![total / n as f64], move |g, _| {
        let scale = g[0] / n as f64;
        let mut gx = probs;
        for (i, &label) in labels.iter().enumerate() {
            gx[i * k + label] -= 1.0;
        }
        gx.iter_mut().for_each(|v| *v *= scale);
        vec![Some(gx)]
    })
}
