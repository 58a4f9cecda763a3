//! Randomized finite-difference checks, one family per differentiable op.
//! Each family draws `CASES` independent shapes and values.

use rand::Rng;
use sresnet::nn::{Module, ResidualBlock, SeBlock};
use sresnet::tensor::ops::{self, RunningStats};
use sresnet::tensor::Tensor;

use super::{away_from_zero, gradcheck, gradcheck_module, random_tensor, rng, uniform_vec};

pub const CASES: usize = 20;

pub const OPS: [&str; 10] = [
    "conv2d",
    "batch_norm2d",
    "relu",
    "sigmoid",
    "max_pool2d",
    "global_avg_pool",
    "linear",
    "residual_forward",
    "se_forward",
    "cross_entropy",
];

/// Values that are pairwise at least 0.01 apart, so pooling windows never
/// hold near-ties inside the finite-difference stencil.
fn spaced(r: &mut rand::rngs::StdRng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - n as f64 * 0.005).collect();
    for i in (1..n).rev() {
        let j = r.random_range(0..=i);
        v.swap(i, j);
    }
    Tensor::new(shape, v).unwrap()
}

fn randomize_params<M: Module>(m: &mut M, r: &mut rand::rngs::StdRng) {
    for p in m.params_mut() {
        let name = p.name().to_string();
        let n = p.len();
        let (lo, hi) = if name.ends_with("bn1.weight")
            || name.ends_with("bn2.weight")
            || name.ends_with(".1.weight")
        {
            (0.5, 1.5)
        } else {
            (-0.5, 0.5)
        };
        p.set_values(uniform_vec(r, n, lo, hi)).unwrap();
    }
}

/// Worst relative error over `CASES` random cases of `op`.
pub fn check(op: &str, seed: u64) -> f64 {
    let mut worst: f64 = 0.0;
    for case in 0..CASES as u64 {
        let s = seed.wrapping_mul(1000).wrapping_add(case);
        let mut r = rng(s);
        let err = match op {
            "conv2d" => {
                let (n, cin, cout) = (
                    r.random_range(1..=2),
                    r.random_range(1..=3),
                    r.random_range(1..=3),
                );
                let k = if r.random::<bool>() { 3 } else { 1 };
                let (stride, pad) = (r.random_range(1..=2), r.random_range(0..=1));
                let (h, w) = (r.random_range(3..=5), r.random_range(3..=5));
                let bias = r.random::<bool>();
                let mut inputs = vec![
                    random_tensor(&mut r, &[n, cin, h, w], -1.0, 1.0),
                    random_tensor(&mut r, &[cout, cin, k, k], -1.0, 1.0),
                ];
                if bias {
                    inputs.push(random_tensor(&mut r, &[cout], -1.0, 1.0));
                }
                gradcheck(&inputs, s, |a| {
                    ops::conv2d(&a[0], &a[1], a.get(2), stride, pad)
                })
            }
            "batch_norm2d" => {
                let (n, c) = (r.random_range(2..=3), r.random_range(1..=3));
                let (h, w) = (r.random_range(1..=3), r.random_range(2..=3));
                let inputs = vec![
                    random_tensor(&mut r, &[n, c, h, w], -2.0, 2.0),
                    random_tensor(&mut r, &[c], 0.5, 1.5),
                    random_tensor(&mut r, &[c], -0.5, 0.5),
                ];
                let training = case % 4 != 3;
                let running = RunningStats {
                    mean: uniform_vec(&mut r, c, -0.5, 0.5),
                    var: uniform_vec(&mut r, c, 0.5, 2.0),
                };
                gradcheck(&inputs, s, |a| {
                    let mut rs = running.clone();
                    ops::batch_norm2d(&a[0], &a[1], &a[2], &mut rs, training, 0.1, 1e-5)
                })
            }
            "relu" => {
                let shape = [r.random_range(1..=3), r.random_range(1..=4), 2, 3];
                gradcheck(&[away_from_zero(&mut r, &shape)], s, |a| ops::relu(&a[0]))
            }
            "sigmoid" => {
                let shape = [r.random_range(1..=3), r.random_range(1..=6)];
                gradcheck(&[random_tensor(&mut r, &shape, -6.0, 6.0)], s, |a| {
                    ops::sigmoid(&a[0])
                })
            }
            "max_pool2d" => {
                let (k, stride, pad) = match case % 3 {
                    0 => (2, 2, 0),
                    1 => (3, 2, 1),
                    _ => (2, 1, 0),
                };
                let shape = [
                    r.random_range(1..=2),
                    r.random_range(1..=3),
                    r.random_range(3..=6),
                    r.random_range(3..=6),
                ];
                gradcheck(&[spaced(&mut r, &shape)], s, |a| {
                    ops::max_pool2d(&a[0], k, stride, pad)
                })
            }
            "global_avg_pool" => {
                let shape = [
                    r.random_range(1..=3),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                    r.random_range(1..=4),
                ];
                gradcheck(&[random_tensor(&mut r, &shape, -1.0, 1.0)], s, |a| {
                    ops::global_avg_pool(&a[0])
                })
            }
            "linear" => {
                let (n, din, dout) = (
                    r.random_range(1..=4),
                    r.random_range(1..=6),
                    r.random_range(1..=5),
                );
                let inputs = vec![
                    random_tensor(&mut r, &[n, din], -1.0, 1.0),
                    random_tensor(&mut r, &[dout, din], -1.0, 1.0),
                    random_tensor(&mut r, &[dout], -1.0, 1.0),
                ];
                gradcheck(&inputs, s, |a| ops::linear(&a[0], &a[1], Some(&a[2])))
            }
            "residual_forward" => {
                let cin = r.random_range(1..=2);
                let (cout, stride) = match case % 3 {
                    0 => (cin, 1),
                    1 => (cin + 1, 1),
                    _ => (cin + 1, 2),
                };
                let mut block = ResidualBlock::new("blk", cin, cout, stride, s);
                randomize_params(&mut block, &mut r);
                let x = random_tensor(&mut r, &[2, cin, 4, 4], -1.0, 1.0);
                let training = case % 2 == 0;
                gradcheck_module(&x, &block, training, s, |m, x, ctx| m.forward(x, ctx))
            }
            "se_forward" => {
                let c = r.random_range(2..=6);
                let reduction = r.random_range(1..=2);
                let mut se = SeBlock::new("se", c, reduction, case % 2 == 0, s).unwrap();
                randomize_params(&mut se, &mut r);
                let n = r.random_range(1..=2);
                let x = random_tensor(&mut r, &[n, c, 3, 3], -1.0, 1.0);
                gradcheck_module(&x, &se, false, s, |m, x, ctx| m.forward(x, ctx))
            }
            "cross_entropy" => {
                let (n, k) = (r.random_range(1..=5), r.random_range(2..=7));
                let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..k)).collect();
                let logits = random_tensor(&mut r, &[n, k], -4.0, 4.0);
                gradcheck(&[logits], s, |a| ops::cross_entropy(&a[0], &labels))
            }
            other => panic!("unknown op {other}"),
        };
        worst = worst.max(err);
    }
    worst
}
