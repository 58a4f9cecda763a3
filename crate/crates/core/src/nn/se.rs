use super::layers::{BatchNorm2d, Linear, Module};
use super::param::{ForwardCtx, Param};
use crate::error::{Error, Result};
use crate::tensor::ops;
use crate::tensor::Tensor;

/// Squeeze-and-excitation channel gate.
///
/// Squeeze: global average pool to one value per channel. Excitation:
/// `sigmoid(fc2(relu(fc1(s))))` yields a weight in (0, 1) per channel, which
/// rescales the corresponding input plane.
#[derive(Clone, Debug)]
pub struct SeBlock {
    pub reduction: usize,
    pub fc1: Linear,
    pub fc2: Linear,
}

impl SeBlock {
    /// Bottleneck width is `max(1, channels / reduction)`.
    pub fn new(
        name: &str,
        channels: usize,
        reduction: usize,
        bias: bool,
        seed: u64,
    ) -> Result<Self> {
        if reduction == 0 || channels == 0 {
            return Err(Error::Config(format!(
                "SE block needs positive channels and reduction, got {channels} and {reduction}"
            )));
        }
        let hidden = (channels / reduction).max(1);
        Ok(Self {
            reduction,
            fc1: Linear::new(&format!("{name}.fc1"), channels, hidden, bias, seed),
            fc2: Linear::new(&format!("{name}.fc2"), hidden, channels, bias, seed),
        })
    }

    pub fn channels(&self) -> usize {
        self.fc1.in_features()
    }

    pub fn hidden(&self) -> usize {
        self.fc1.out_features()
    }

    /// Per-channel excitation weights `[N,C]` for `x: [N,C,H,W]`.
    pub fn gate(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let c = x.shape().get(1).copied().unwrap_or(0);
        if x.ndim() != 4 || c != self.channels() {
            return Err(Error::Dimension(format!(
                "SE block expects [N,{},H,W], got {:?}",
                self.channels(),
                x.shape()
            )));
        }
        let squeezed = ops::global_avg_pool(x)?;
        let h = ops::relu(&self.fc1.forward(&squeezed, ctx)?)?;
        ops::sigmoid(&self.fc2.forward(&h, ctx)?)
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let w = self.gate(x, ctx)?;
        ops::scale_channels(x, &w)
    }

    /// Zeroes the excitation weights and pins fc2's bias so every gate sits
    /// at `sigmoid(bias)`. Requires fc2 to have a bias.
    pub fn saturate(&mut self, bias: f64) -> Result<()> {
        let b = self.fc2.bias.as_mut().ok_or_else(|| {
            Error::Config("cannot saturate an SE block built without biases".to_string())
        })?;
        b.values_mut().fill(bias);
        self.fc2.weight.values_mut().fill(0.0);
        Ok(())
    }
}

impl Module for SeBlock {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.fc1.params();
        out.extend(self.fc2.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.fc1.params_mut();
        out.extend(self.fc2.params_mut());
        out
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        Vec::new()
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        Vec::new()
    }
}
