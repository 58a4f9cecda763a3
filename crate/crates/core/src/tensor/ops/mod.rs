//! Differentiable operations.

mod conv;
mod linear;
mod loss;
mod norm;
mod pool;

pub use conv::{conv2d, conv_output_size};
pub use linear::linear;
pub use loss::{cross_entropy, logsumexp};
pub use norm::{batch_norm2d, RunningStats};
pub use pool::{global_avg_pool, max_pool2d};

use super::tape::record;
use super::Tensor;
use crate::error::{Error, Result};

pub(crate) fn dims4(t: &Tensor, what: &str) -> Result<[usize; 4]> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        ref s => Err(Error::Dimension(format!(
            "{what} must be 4-D [N,C,H,W], got {s:?}"
        ))),
    }
}

pub(crate) fn dims2(t: &Tensor, what: &str) -> Result<[usize; 2]> {
    match *t.shape() {
        [a, b] => Ok([a, b]),
        ref s => Err(Error::Dimension(format!("{what} must be 2-D, got {s:?}"))),
    }
}

fn same_shape(a: &Tensor, b: &Tensor, op: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{op}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn reshape(x: &Tensor, shape: &[usize]) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    if n != x.len() || shape.contains(&0) {
        return Err(Error::Dimension(format!(
            "cannot reshape {:?} into {shape:?}",
            x.shape()
        )));
    }
    record(&[x], shape.to_vec(), x.data().to_vec(), |g, _| {
        vec![Some(g.to_vec())]
    })
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b, "add")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    record(&[a, b], a.shape().to_vec(), data, |g, needs| {
        needs.iter().map(|&need| need.then(|| g.to_vec())).collect()
    })
}

/// Elementwise product.
pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b, "mul")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    let (da, db) = (a.shared_data().clone(), b.shared_data().clone());
    record(&[a, b], a.shape().to_vec(), data, move |g, needs| {
        let ga = needs[0].then(|| g.iter().zip(db.iter()).map(|(g, y)| g * y).collect());
        let gb = needs[1].then(|| g.iter().zip(da.iter()).map(|(g, x)| g * x).collect());
        vec![ga, gb]
    })
}

pub fn scale(x: &Tensor, factor: f64) -> Result<Tensor> {
    let data = x.data().iter().map(|v| v * factor).collect();
    record(&[x], x.shape().to_vec(), data, move |g, _| {
        vec![Some(g.iter().map(|g| g * factor).collect())]
    })
}

/// Sum of all elements, accumulated in row-major order.
pub fn sum(x: &Tensor) -> Result<Tensor> {
    let total: f64 = x.data().iter().sum();
    let n = x.len();
    record(&[x], vec![1], vec![total], move |g, _| {
        vec![Some(vec![g[0]; n])]
    })
}

/// `Σ xᵢ·wᵢ` against a constant weight vector.
pub fn weighted_sum(x: &Tensor, weights: &[f64]) -> Result<Tensor> {
    if weights.len() != x.len() {
        return Err(Error::Dimension(format!(
            "weighted_sum: {} weights for {} elements",
            weights.len(),
            x.len()
        )));
    }
    let total = x.data().iter().zip(weights).map(|(a, b)| a * b).sum();
    let w = weights.to_vec();
    record(&[x], vec![1], vec![total], move |g, _| {
        vec![Some(w.iter().map(|w| w * g[0]).collect())]
    })
}

pub fn relu(x: &Tensor) -> Result<Tensor> {
    let data = x
        .data()
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    let saved = x.shared_data().clone();
    record(&[x], x.shape().to_vec(), data, move |g, _| {
        let gx = g
            .iter()
            .zip(saved.iter())
            .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
            .collect();
        vec![Some(gx)]
    })
}

pub(crate) fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    let out: Vec<f64> = x.data().iter().map(|&v| sigmoid_scalar(v)).collect();
    let saved = std::sync::Arc::new(out.clone());
    record(&[x], x.shape().to_vec(), out, move |g, _| {
        let gx = g
            .iter()
            .zip(saved.iter())
            .map(|(&g, &s)| g * s * (1.0 - s))
            .collect();
        vec![Some(gx)]
    })
}

/// Scales each `(n, c)` plane of `x: [N,C,H,W]` by `weights[n, c]`.
pub fn scale_channels(x: &Tensor, weights: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(x, "scale_channels input")?;
    if weights.shape() != [n, c] {
        return Err(Error::Dimension(format!(
            "scale_channels: weights {:?} do not match [N,C] = [{n}, {c}]",
            weights.shape()
        )));
    }
    let plane = h * w;
    let mut out = x.data().to_vec();
    for (chunk, &s) in out.chunks_mut(plane).zip(weights.data()) {
        chunk.iter_mut().for_each(|v| *v *= s);
    }
    let (xd, wd) = (x.shared_data().clone(), weights.shared_data().clone());
    record(&[x, weights], x.shape().to_vec(), out, move |g, needs| {
        let gx = needs[0].then(|| {
            let mut gx = g.to_vec();
            for (chunk, &s) in gx.chunks_mut(plane).zip(wd.iter()) {
                chunk.iter_mut().for_each(|v| *v *= s);
            }
            gx
        });
        let gw = needs[1].then(|| {
            g.chunks(plane)
                .zip(xd.chunks(plane))
                .map(|(gc, xc)| gc.iter().zip(xc).map(|(a, b)| a * b).sum())
                .collect()
        });
        vec![gx, gw]
    })
}
