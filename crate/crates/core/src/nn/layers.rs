use super::param::{ForwardCtx, Param};
use crate::error::Result;
use crate::tensor::ops::{self, RunningStats};
use crate::tensor::Tensor;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

/// Anything owning parameters and batch-norm layers.
pub trait Module {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;
    fn batch_norms(&self) -> Vec<&BatchNorm2d>;
    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d>;

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Conv2d {
    pub weight: Param,
    pub bias: Option<Param>,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    /// Bias-free convolution (every conv in the network feeds a batch norm).
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        seed: u64,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        Self {
            weight: Param::kaiming(
                format!("{name}.weight"),
                &[out_channels, in_channels, kernel, kernel],
                fan_in,
                seed,
            ),
            bias: None,
            stride,
            padding,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let w = ctx.param(&self.weight)?;
        let b = self.bias.as_ref().map(|b| ctx.param(b)).transpose()?;
        ops::conv2d(x, &w, b.as_ref(), self.stride, self.padding)
    }
}

#[derive(Clone, Debug)]
pub struct BatchNorm2d {
    name: String,
    pub gamma: Param,
    pub beta: Param,
    pub running: RunningStats,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNorm2d {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            name: name.to_string(),
            gamma: Param::filled(format!("{name}.weight"), &[channels], 1.0),
            beta: Param::zeros(format!("{name}.bias"), &[channels]),
            running: RunningStats::new(channels),
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn channels(&self) -> usize {
        self.running.channels()
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let gamma = ctx.param(&self.gamma)?;
        let beta = ctx.param(&self.beta)?;
        let mut stats = self.running.clone();
        let training = ctx.is_training();
        let y = ops::batch_norm2d(
            x,
            &gamma,
            &beta,
            &mut stats,
            training,
            self.momentum,
            self.eps,
        )?;
        if training {
            ctx.push_stats(&self.name, stats);
        }
        Ok(y)
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: Param,
    pub bias: Option<Param>,
}

impl Linear {
    pub fn new(name: &str, in_features: usize, out_features: usize, bias: bool, seed: u64) -> Self {
        Self {
            weight: Param::kaiming(
                format!("{name}.weight"),
                &[out_features, in_features],
                in_features,
                seed,
            ),
            bias: bias.then(|| Param::zeros(format!("{name}.bias"), &[out_features])),
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let w = ctx.param(&self.weight)?;
        let b = self.bias.as_ref().map(|b| ctx.param(b)).transpose()?;
        ops::linear(x, &w, b.as_ref())
    }

    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight)
            .chain(self.bias.as_ref())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight)
            .chain(self.bias.as_mut())
            .collect()
    }
}

impl Module for Conv2d {
    fn params(&self) -> Vec<&Param> {
        std::iter::once(&self.weight)
            .chain(self.bias.as_ref())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        std::iter::once(&mut self.weight)
            .chain(self.bias.as_mut())
            .collect()
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        Vec::new()
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        Vec::new()
    }
}

impl Module for BatchNorm2d {
    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        vec![self]
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        vec![self]
    }
}

impl Module for Linear {
    fn params(&self) -> Vec<&Param> {
        Linear::params(self)
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Linear::params_mut(self)
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        Vec::new()
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        Vec::new()
    }
}
