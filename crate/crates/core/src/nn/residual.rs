use super::layers::{BatchNorm2d, Conv2d, Module};
use super::param::{ForwardCtx, Param};
use crate::error::{Error, Result};
use crate::tensor::ops;
use crate::tensor::Tensor;

/// Projection used when a block changes resolution or width.
#[derive(Clone, Debug)]
pub struct Shortcut {
    pub conv: Conv2d,
    pub bn: BatchNorm2d,
}

/// Two-convolution basic block: `relu(bn2(conv2(relu(bn1(conv1(x))))) + shortcut(x))`.
#[derive(Clone, Debug)]
pub struct ResidualBlock {
    pub conv1: Conv2d,
    pub bn1: BatchNorm2d,
    pub conv2: Conv2d,
    pub bn2: BatchNorm2d,
    pub shortcut: Option<Shortcut>,
}

impl ResidualBlock {
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        seed: u64,
    ) -> Self {
        let shortcut = (stride != 1 || in_channels != out_channels).then(|| Shortcut {
            conv: Conv2d::new(
                &format!("{name}.downsample.0"),
                in_channels,
                out_channels,
                1,
                stride,
                0,
                seed,
            ),
            bn: BatchNorm2d::new(&format!("{name}.downsample.1"), out_channels),
        });
        Self {
            conv1: Conv2d::new(
                &format!("{name}.conv1"),
                in_channels,
                out_channels,
                3,
                stride,
                1,
                seed,
            ),
            bn1: BatchNorm2d::new(&format!("{name}.bn1"), out_channels),
            conv2: Conv2d::new(
                &format!("{name}.conv2"),
                out_channels,
                out_channels,
                3,
                1,
                1,
                seed,
            ),
            bn2: BatchNorm2d::new(&format!("{name}.bn2"), out_channels),
            shortcut,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.conv1.in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.conv2.out_channels()
    }

    /// The residual branch `F(x)` before the addition.
    pub fn residual(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let h = self.conv1.forward(x, ctx)?;
        let h = ops::relu(&self.bn1.forward(&h, ctx)?)?;
        let h = self.conv2.forward(&h, ctx)?;
        self.bn2.forward(&h, ctx)
    }

    pub fn forward(&self, x: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        let c = x.shape().get(1).copied().unwrap_or(0);
        if x.ndim() != 4 || c != self.in_channels() {
            return Err(Error::Dimension(format!(
                "residual block expects [N,{},H,W], got {:?}",
                self.in_channels(),
                x.shape()
            )));
        }
        let f = self.residual(x, ctx)?;
        let skip = match &self.shortcut {
            Some(sc) => {
                let s = sc.conv.forward(x, ctx)?;
                sc.bn.forward(&s, ctx)?
            }
            None => x.clone(),
        };
        ops::relu(&ops::add(&f, &skip)?)
    }
}

impl Module for ResidualBlock {
    fn params(&self) -> Vec<&Param> {
        let mut out = self.conv1.params();
        out.extend(self.bn1.params());
        out.extend(self.conv2.params());
        out.extend(self.bn2.params());
        if let Some(sc) = &self.shortcut {
            out.extend(sc.conv.params());
            out.extend(sc.bn.params());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.conv1.params_mut();
        out.extend(self.bn1.params_mut());
        out.extend(self.conv2.params_mut());
        out.extend(self.bn2.params_mut());
        if let Some(sc) = &mut self.shortcut {
            out.extend(sc.conv.params_mut());
            out.extend(sc.bn.params_mut());
        }
        out
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        let mut out = vec![&self.bn1, &self.bn2];
        out.extend(self.shortcut.as_ref().map(|s| &s.bn));
        out
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        let mut out = vec![&mut self.bn1, &mut self.bn2];
        out.extend(self.shortcut.as_mut().map(|s| &mut s.bn));
        out
    }
}
