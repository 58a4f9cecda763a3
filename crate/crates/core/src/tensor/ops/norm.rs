use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dims4;
use crate::error::{Error, Result};
use crate::tensor::tape::record;
use crate::tensor::Tensor;

/// Per-channel running estimates used by batch norm in inference mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}

/// Batch normalization over `[N,C,H,W]`.
///
/// Training mode normalizes with the batch's per-channel mean and biased
/// variance and blends them into `running` as
/// `(1 - momentum) * old + momentum * batch`. Inference mode reads `running`
/// and leaves it untouched.
pub fn batch_norm2d(
    input: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    running: &mut RunningStats,
    training: bool,
    momentum: f64,
    eps: f64,
) -> Result<Tensor> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!(
            "batch norm eps must be > 0, got {eps}"
        )));
    }
    if !(0.0..=1.0).contains(&momentum) {
        return Err(Error::Config(format!(
            "batch norm momentum must lie in [0, 1], got {momentum}"
        )));
    }
    let [n, c, h, w] = dims4(input, "batch_norm2d input")?;
    for (t, what) in [(gamma, "gamma"), (beta, "beta")] {
        if t.shape() != [c] {
            return Err(Error::Dimension(format!(
                "batch_norm2d: {what} shape {:?} does not match {c} channels",
                t.shape()
            )));
        }
    }
    if running.mean.len() != c || running.var.len() != c {
        return Err(Error::Dimension(format!(
            "batch_norm2d: running stats hold {} channels, input has {c}",
            running.mean.len()
        )));
    }
    let plane = h * w;
    let count = n * plane;
    if training && count < 2 {
        return Err(Error::DegenerateBatch(format!(
            "training-mode batch norm needs at least 2 values per channel, got {count}"
        )));
    }

    let x = input.data();
    let index = move |s: usize, ch: usize| (s * c + ch) * plane;
    let (mean, var) = if training {
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for ch in 0..c {
            let mut acc = 0.0;
            for s in 0..n {
                acc += x[index(s, ch)..index(s, ch) + plane].iter().sum::<f64>();
            }
            let mu = acc / count as f64;
            let mut sq = 0.0;
            for s in 0..n {
                sq += x[index(s, ch)..index(s, ch) + plane]
                    .iter()
                    .map(|v| (v - mu) * (v - mu))
                    .sum::<f64>();
            }
            mean[ch] = mu;
            var[ch] = sq / count as f64;
        }
        for ch in 0..c {
            running.mean[ch] = (1.0 - momentum) * running.mean[ch] + momentum * mean[ch];
            running.var[ch] = (1.0 - momentum) * running.var[ch] + momentum * var[ch];
        }
        (mean, var)
    } else {
        (running.mean.clone(), running.var.clone())
    };

    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let (g, b) = (gamma.data(), beta.data());
    let mut xhat = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for s in 0..n {
        for ch in 0..c {
            let base = index(s, ch);
            for i in base..base + plane {
                let xh = (x[i] - mean[ch]) * inv_std[ch];
                xhat[i] = xh;
                out[i] = g[ch] * xh + b[ch];
            }
        }
    }

    let gamma_d = Arc::clone(gamma.shared_data());
    record(
        &[input, gamma, beta],
        input.shape().to_vec(),
        out,
        move |gy, needs| {
            let mut sum_g = vec![0.0; c];
            let mut sum_gx = vec![0.0; c];
            for s in 0..n {
                for ch in 0..c {
                    let base = index(s, ch);
                    for i in base..base + plane {
                        sum_g[ch] += gy[i];
                        sum_gx[ch] += gy[i] * xhat[i];
                    }
                }
            }
            let gx = needs[0].then(|| {
                let mut gx = vec![0.0; gy.len()];
                let m = count as f64;
                for s in 0..n {
                    for ch in 0..c {
                        let base = index(s, ch);
                        let scale = gamma_d[ch] * inv_std[ch];
                        for i in base..base + plane {
                            gx[i] = if training {
                                scale * (gy[i] - sum_g[ch] / m - xhat[i] * sum_gx[ch] / m)
                            } else {
                                scale * gy[i]
                            };
                        }
                    }
                }
                gx
            });
            vec![
                gx,
                needs[1].then(|| sum_gx.clone()),
                needs[2].then(|| sum_g.clone()),
            ]
        },
    )
}
