use std::sync::Arc;

use super::dims2;
use crate::error::{Error, Result};
use crate::tensor::gemm::{gemm, MatRef};
use crate::tensor::tape::record;
use crate::tensor::Tensor;

/// `input · weightᵀ + bias` for `input: [N,Din]`, `weight: [Dout,Din]`.
pub fn linear(input: &Tensor, weight: &Tensor, bias: Option<&Tensor>) -> Result<Tensor> {
    let [n, din] = dims2(input, "linear input")?;
    let [dout, wdin] = dims2(weight, "linear weight")?;
    if din != wdin {
        return Err(Error::Dimension(format!(
            "linear: input features {din} but weight expects {wdin}"
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [dout] {
            return Err(Error::Dimension(format!(
                "linear: bias shape {:?} does not match {dout} outputs",
                b.shape()
            )));
        }
    }
    let mut out = vec![0.0; n * dout];
    gemm(
        MatRef::new(input.data(), n, din),
        MatRef::new(weight.data(), dout, din).t(),
        0.0,
        &mut out,
    );
    if let Some(b) = bias {
        for row in out.chunks_mut(dout) {
            row.iter_mut().zip(b.data()).for_each(|(v, bv)| *v += bv);
        }
    }

    let xd = Arc::clone(input.shared_data());
    let wd = Arc::clone(weight.shared_data());
    let mut inputs = vec![input, weight];
    inputs.extend(bias);
    record(&inputs, vec![n, dout], out, move |g, needs| {
        let gm = MatRef::new(g, n, dout);
        let gx = needs[0].then(|| {
            let mut gx = vec![0.0; n * din];
            gemm(gm, MatRef::new(&wd, dout, din), 0.0, &mut gx);
            gx
        });
        let gw = needs[1].then(|| {
            let mut gw = vec![0.0; dout * din];
            gemm(gm.t(), MatRef::new(&xd, n, din), 0.0, &mut gw);
            gw
        });
        let mut grads = vec![gx, gw];
        if needs.len() > 2 {
            grads.push(needs[2].then(|| {
                let mut gb = vec![0.0; dout];
                for row in g.chunks(dout) {
                    gb.iter_mut().zip(row).for_each(|(a, b)| *a += b);
                }
                gb
            }));
        }
        grads
    })
}
