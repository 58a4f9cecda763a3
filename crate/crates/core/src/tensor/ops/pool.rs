use super::{conv_output_size, dims4};
use crate::error::{Error, Result};
use crate::tensor::tape::record;
use crate::tensor::Tensor;

/// Windowed maximum over each channel plane. Padding cells never win.
///
/// The gradient of each window goes to its first maximal element in
/// row-major order.
pub fn max_pool2d(input: &Tensor, kernel: usize, stride: usize, padding: usize) -> Result<Tensor> {
    let [n, c, h, w] = dims4(input, "max_pool2d input")?;
    if padding * 2 > kernel {
        return Err(Error::Config(format!(
            "max_pool2d padding {padding} exceeds half the kernel {kernel}"
        )));
    }
    if kernel > h + 2 * padding || kernel > w + 2 * padding {
        return Err(Error::Dimension(format!(
            "max_pool2d window {kernel} larger than input {h}x{w} (padding {padding})"
        )));
    }
    let ho = conv_output_size(h, kernel, stride, padding)?;
    let wo = conv_output_size(w, kernel, stride, padding)?;
    let x = input.data();
    let planes = n * c;
    let mut out = Vec::with_capacity(planes * ho * wo);
    let mut argmax = Vec::with_capacity(planes * ho * wo);
    for pl in 0..planes {
        let base = pl * h * w;
        for oh in 0..ho {
            for ow in 0..wo {
                let mut best = f64::NEG_INFINITY;
                let mut best_at = usize::MAX;
                for ki in 0..kernel {
                    let ih = (oh * stride + ki) as isize - padding as isize;
                    if ih < 0 || ih as usize >= h {
                        continue;
                    }
                    for kj in 0..kernel {
                        let iw = (ow * stride + kj) as isize - padding as isize;
                        if iw < 0 || iw as usize >= w {
                            continue;
                        }
                        let at = base + ih as usize * w + iw as usize;
                        if best_at == usize::MAX || x[at] > best {
                            best = x[at];
                            best_at = at;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_at);
            }
        }
    }
    let len = x.len();
    record(&[input], vec![n, c, ho, wo], out, move |g, _| {
        let mut gx = vec![0.0; len];
        for (&at, &gv) in argmax.iter().zip(g) {
            gx[at] += gv;
        }
        vec![Some(gx)]
    })
}

/// Spatial mean per channel: `[N,C,H,W] -> [N,C]`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = dims4(input, "global_avg_pool input")?;
    let plane = h * w;
    let area = plane as f64;
    let out = input
        .data()
        .chunks(plane)
        .map(|p| p.iter().sum::<f64>() / area)
        .collect();
    record(&[input], vec![n, c], out, move |g, _| {
        let mut gx = Vec::with_capacity(g.len() * plane);
        for &gv in g {
            gx.extend(std::iter::repeat_n(gv / area, plane));
        }
        vec![Some(gx)]
    })
}
