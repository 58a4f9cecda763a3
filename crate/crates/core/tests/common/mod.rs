//! Test-only oracles: central finite differences and loop-level references.
//! Nothing here calls into the crate's kernels except through the public
//! forward functions being checked.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sresnet::nn::{ForwardCtx, Module};
use sresnet::tensor::{ops, Tape, Tensor};
use sresnet::Result;

pub mod ce_oracle;
pub mod grad_suite;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_REL_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn random_tensor(rng: &mut StdRng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, uniform_vec(rng, n, lo, hi)).unwrap()
}

/// Values bounded away from zero, so ReLU kinks stay outside the FD stencil.
pub fn away_from_zero(rng: &mut StdRng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let v = (0..n)
        .map(|_| {
            let m = rng.random_range(0.05..1.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape, v).unwrap()
}

/// Relative error with a floor on the denominator: gradients smaller than
/// the floor are compared absolutely (to `GRAD_REL_TOL * floor`).
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

fn weighted(out: &Tensor, weights: &[f64]) -> f64 {
    out.data().iter().zip(weights).map(|(a, b)| a * b).sum()
}

/// Max relative error between tape gradients and central differences of the
/// scalar `Σ f(inputs) · r` for a fixed random `r`, over every element of
/// every input.
pub fn gradcheck<F>(inputs: &[Tensor], seed: u64, f: F) -> f64
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    let probe = f(inputs).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let weights = uniform_vec(&mut r, probe.len(), -1.0, 1.0);

    let tape = Tape::new();
    let watched: Vec<Tensor> = inputs.iter().map(|t| tape.watch(t).unwrap()).collect();
    let loss = ops::weighted_sum(&f(&watched).unwrap(), &weights).unwrap();
    loss.backward().unwrap();

    let mut worst: f64 = 0.0;
    for (i, input) in inputs.iter().enumerate() {
        let analytic = watched[i].grad().expect("leaf gradient");
        for j in 0..input.len() {
            let eval = |delta: f64| {
                let mut args = inputs.to_vec();
                let mut v = input.data().to_vec();
                v[j] += delta;
                args[i] = Tensor::new(input.shape(), v).unwrap();
                weighted(&f(&args).unwrap(), &weights)
            };
            let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic[j], numeric));
        }
    }
    worst
}

/// Like [`gradcheck`] for a parameterized block: checks the input and every
/// parameter. The forward runs in training mode when `training` is set.
// `j` indexes both the analytic gradient and the perturbed parameter
#[allow(clippy::needless_range_loop)]
pub fn gradcheck_module<M, F>(x: &Tensor, module: &M, training: bool, seed: u64, fwd: F) -> f64
where
    M: Module + Clone,
    F: Fn(&M, &Tensor, &mut ForwardCtx<'_>) -> Result<Tensor>,
{
    let run = |m: &M, x: &Tensor| -> Tensor {
        let mut ctx = if training {
            ForwardCtx::training(None)
        } else {
            ForwardCtx::inference()
        };
        fwd(m, x, &mut ctx).unwrap()
    };

    let probe = run(module, x);
    let mut r = rng(seed ^ 0xb10c);
    let weights = uniform_vec(&mut r, probe.len(), -1.0, 1.0);

    let tape = Tape::new();
    let xw = tape.watch(x).unwrap();
    let mut ctx = if training {
        ForwardCtx::training(Some(&tape))
    } else {
        ForwardCtx::frozen_stats(&tape)
    };
    let out = fwd(module, &xw, &mut ctx).unwrap();
    let (bindings, _) = ctx.into_parts();
    ops::weighted_sum(&out, &weights)
        .unwrap()
        .backward()
        .unwrap();
    let grads = bindings.grads();

    let mut worst: f64 = 0.0;
    let gx = xw.grad().unwrap();
    for j in 0..x.len() {
        let eval = |delta: f64| {
            let mut v = x.data().to_vec();
            v[j] += delta;
            weighted(&run(module, &Tensor::new(x.shape(), v).unwrap()), &weights)
        };
        let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(gx[j], numeric));
    }

    let names: Vec<String> = module
        .params()
        .iter()
        .map(|p| p.name().to_string())
        .collect();
    for (pi, name) in names.iter().enumerate() {
        let analytic = grads
            .get(name)
            .unwrap_or_else(|| panic!("no gradient for {name}"));
        for j in 0..analytic.len() {
            let eval = |delta: f64| {
                let mut m = module.clone();
                m.params_mut()[pi].values_mut()[j] += delta;
                weighted(&run(&m, x), &weights)
            };
            let numeric = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic[j], numeric));
        }
    }
    worst
}

/// Direct six-loop cross-correlation.
pub fn naive_conv2d(
    x: &Tensor,
    w: &Tensor,
    bias: Option<&[f64]>,
    stride: usize,
    pad: usize,
) -> Vec<f64> {
    let (n, cin, h, wd) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (cout, kh, kw) = (w.shape()[0], w.shape()[2], w.shape()[3]);
    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (wd + 2 * pad - kw) / stride + 1;
    let mut out = vec![0.0; n * cout * ho * wo];
    for s in 0..n {
        for co in 0..cout {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = bias.map_or(0.0, |b| b[co]);
                    for ci in 0..cin {
                        for ki in 0..kh {
                            for kj in 0..kw {
                                let ih = (oh * stride + ki) as isize - pad as isize;
                                let iw = (ow * stride + kj) as isize - pad as isize;
                                if ih < 0 || iw < 0 || ih as usize >= h || iw as usize >= wd {
                                    continue;
                                }
                                acc += x.at(&[s, ci, ih as usize, iw as usize])
                                    * w.at(&[co, ci, ki, kj]);
                            }
                        }
                    }
                    out[((s * cout + co) * ho + oh) * wo + ow] = acc;
                }
            }
        }
    }
    out
}

pub fn naive_matmul_t(x: &[f64], n: usize, din: usize, w: &[f64], dout: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * dout];
    for i in 0..n {
        for o in 0..dout {
            let mut acc = 0.0;
            for k in 0..din {
                acc += x[i * din + k] * w[o * din + k];
            }
            out[i * dout + o] = acc;
        }
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn name_seed(seed: u64, name: &str) -> u64 {
    name.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Overwrites every parameter and running statistic with values that depend
/// only on `seed` and the tensor's name, so two models with different SE
/// placement end up sharing every common tensor.
pub fn perturb_model(model: &mut sresnet::model::Model, seed: u64) {
    for p in model.params_mut() {
        let mut r = rng(name_seed(seed, p.name()));
        let n = p.len();
        let values = if p.name().ends_with("bn1.weight")
            || p.name().ends_with("bn2.weight")
            || p.name().ends_with(".1.weight")
        {
            uniform_vec(&mut r, n, 0.7, 1.3)
        } else if p.name().ends_with(".bias") {
            uniform_vec(&mut r, n, -0.1, 0.1)
        } else {
            p.values()
                .iter()
                .map(|v| v * r.random_range(0.8..1.2))
                .collect()
        };
        p.set_values(values).unwrap();
    }
    for bn in model.batch_norms_mut() {
        let mut r = rng(name_seed(seed, bn.name()));
        let c = bn.channels();
        bn.running.mean = uniform_vec(&mut r, c, -0.2, 0.2);
        bn.running.var = uniform_vec(&mut r, c, 0.5, 1.5);
    }
}

/// Saturates the model's SE gate (excitation weights 0, fc2 bias +20) so
/// every channel weight is sigmoid(20).
pub fn saturate_se(model: &mut sresnet::model::Model) {
    model
        .se_block_mut()
        .expect("model has an SE block")
        .saturate(20.0)
        .unwrap();
}
