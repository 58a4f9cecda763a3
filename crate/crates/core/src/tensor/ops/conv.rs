use std::sync::Arc;

use super::dims4;
use crate::error::{Error, Result};
use crate::tensor::gemm::{gemm, MatRef};
use crate::tensor::tape::record;
use crate::tensor::Tensor;

/// Output extent of a strided window along one axis (floor division, as in
/// common deep-learning frameworks).
pub fn conv_output_size(
    input: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<usize> {
    if stride == 0 {
        return Err(Error::Config("stride must be positive".to_string()));
    }
    if kernel == 0 {
        return Err(Error::Config("kernel size must be positive".to_string()));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::Dimension(format!(
            "window {kernel} exceeds padded input extent {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

#[derive(Clone, Copy)]
struct Geometry {
    cin: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    ho: usize,
    wo: usize,
    stride: usize,
    padding: usize,
}

impl Geometry {
    fn k(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn p(&self) -> usize {
        self.ho * self.wo
    }

    fn is_pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.padding == 0
    }

    /// Input coordinate for output index `o` and kernel tap `k`, if inside.
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        let pos = (o * self.stride + k) as isize - self.padding as isize;
        (pos >= 0 && (pos as usize) < extent).then_some(pos as usize)
    }

    fn im2col(&self, x: &[f64], col: &mut [f64]) {
        let p = self.p();
        for ci in 0..self.cin {
            let plane = &x[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let dst = &mut col[row * p..(row + 1) * p];
                    for oh in 0..self.ho {
                        let out_row = &mut dst[oh * self.wo..(oh + 1) * self.wo];
                        match self.source(oh, ki, self.h) {
                            None => out_row.fill(0.0),
                            Some(ih) => {
                                let src = &plane[ih * self.w..(ih + 1) * self.w];
                                for (ow, v) in out_row.iter_mut().enumerate() {
                                    *v = self.source(ow, kj, self.w).map_or(0.0, |iw| src[iw]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn col2im_add(&self, col: &[f64], dx: &mut [f64]) {
        let p = self.p();
        for ci in 0..self.cin {
            let plane = &mut dx[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ki in 0..self.kh {
                for kj in 0..self.kw {
                    let row = (ci * self.kh + ki) * self.kw + kj;
                    let src = &col[row * p..(row + 1) * p];
                    for oh in 0..self.ho {
                        let Some(ih) = self.source(oh, ki, self.h) else {
                            continue;
                        };
                        for ow in 0..self.wo {
                            if let Some(iw) = self.source(ow, kj, self.w) {
                                plane[ih * self.w + iw] += src[oh * self.wo + ow];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2-D cross-correlation of `input: [N,Cin,H,W]` with `weight: [Cout,Cin,kH,kW]`.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    padding: usize,
) -> Result<Tensor> {
    let [n, cin, h, w] = dims4(input, "conv2d input")?;
    let [cout, wcin, kh, kw] = dims4(weight, "conv2d weight")?;
    if cin != wcin {
        return Err(Error::Dimension(format!(
            "conv2d: input channels (axis 1 of input) = {cin} but weight expects {wcin} (axis 1 of weight)"
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [cout] {
            return Err(Error::Dimension(format!(
                "conv2d: bias shape {:?} does not match output channels {cout}",
                b.shape()
            )));
        }
    }
    let ho = conv_output_size(h, kh, stride, padding)?;
    let wo = conv_output_size(w, kw, stride, padding)?;
    let geo = Geometry {
        cin,
        h,
        w,
        kh,
        kw,
        ho,
        wo,
        stride,
        padding,
    };
    let (k, p) = (geo.k(), geo.p());
    let in_stride = cin * h * w;
    let out_stride = cout * p;

    let x = input.data();
    let wmat = MatRef::new(weight.data(), cout, k);
    let mut out = vec![0.0; n * out_stride];
    let mut col = if geo.is_pointwise() {
        Vec::new()
    } else {
        vec![0.0; k * p]
    };
    for (s, out_s) in out.chunks_mut(out_stride).enumerate() {
        let xs = &x[s * in_stride..(s + 1) * in_stride];
        let cols = if geo.is_pointwise() {
            xs
        } else {
            geo.im2col(xs, &mut col);
            &col
        };
        gemm(wmat, MatRef::new(cols, k, p), 0.0, out_s);
        if let Some(b) = bias {
            for (plane, &bv) in out_s.chunks_mut(p).zip(b.data()) {
                plane.iter_mut().for_each(|v| *v += bv);
            }
        }
    }

    let xd = Arc::clone(input.shared_data());
    let wd = Arc::clone(weight.shared_data());
    let mut inputs = vec![input, weight];
    inputs.extend(bias);
    record(&inputs, vec![n, cout, ho, wo], out, move |g, needs| {
        let wmat = MatRef::new(&wd, cout, k);
        let mut col = if geo.is_pointwise() {
            Vec::new()
        } else {
            vec![0.0; k * p]
        };
        let mut dcol = vec![0.0; k * p];
        let mut gx = needs[0].then(|| vec![0.0; n * in_stride]);
        let mut gw = needs[1].then(|| vec![0.0; cout * k]);
        for s in 0..n {
            let gs = MatRef::new(&g[s * out_stride..(s + 1) * out_stride], cout, p);
            if let Some(gw) = gw.as_mut() {
                let xs = &xd[s * in_stride..(s + 1) * in_stride];
                let cols = if geo.is_pointwise() {
                    xs
                } else {
                    geo.im2col(xs, &mut col);
                    &col
                };
                gemm(gs, MatRef::new(cols, k, p).t(), 1.0, gw);
            }
            if let Some(gx) = gx.as_mut() {
                let dxs = &mut gx[s * in_stride..(s + 1) * in_stride];
                if geo.is_pointwise() {
                    gemm(wmat.t(), gs, 0.0, dxs);
                } else {
                    gemm(wmat.t(), gs, 0.0, &mut dcol);
                    geo.col2im_add(&dcol, dxs);
                }
            }
        }
        let mut grads = vec![gx, gw];
        if needs.len() > 2 {
            grads.push(needs[2].then(|| {
                let mut gb = vec![0.0; cout];
                for gs in g.chunks(out_stride) {
                    for (acc, plane) in gb.iter_mut().zip(gs.chunks(p)) {
                        *acc += plane.iter().sum::<f64>();
                    }
                }
                gb
            }));
        }
        grads
    })
}
