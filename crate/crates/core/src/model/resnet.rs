use std::collections::HashMap;

use super::config::{ModelConfig, Scale};
use crate::error::{Error, Result};
use crate::nn::{
    BatchNorm2d, Bindings, Conv2d, ForwardCtx, Linear, Module, Param, ResidualBlock, SeBlock,
};
use crate::tensor::{ops, Tape, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

/// ResNet-18 backbone with an optional SE gate at one stage boundary.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    mode: Mode,
    stem_conv: Conv2d,
    stem_bn: BatchNorm2d,
    stages: Vec<Vec<ResidualBlock>>,
    se: Option<SeBlock>,
    fc: Linear,
}

/// Output of a recorded training forward pass.
pub struct TrainForward {
    pub logits: Tensor,
    pub bindings: Bindings,
}

impl Model {
    /// Builds a freshly initialized network. Each parameter's initial value
    /// depends only on `seed` and its name, so models that differ only in
    /// SE placement share every other initial weight.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let stem_w = config.stem_width();
        let (k, s, p) = match config.scale {
            Scale::Full => (7, 2, 3),
            Scale::Tiny => (3, 1, 1),
        };
        let stem_conv = Conv2d::new("conv1", 3, stem_w, k, s, p, seed);
        let stem_bn = BatchNorm2d::new("bn1", stem_w);

        let widths = config.stage_widths();
        let mut stages = Vec::with_capacity(4);
        let mut in_c = stem_w;
        for (i, (&width, &blocks)) in widths.iter().zip(&config.blocks_per_stage).enumerate() {
            let stride = if i == 0 { 1 } else { 2 };
            let stage = (0..blocks)
                .map(|b| {
                    let name = format!("layer{}.{b}", i + 1);
                    if b == 0 {
                        ResidualBlock::new(&name, in_c, width, stride, seed)
                    } else {
                        ResidualBlock::new(&name, width, width, 1, seed)
                    }
                })
                .collect();
            stages.push(stage);
            in_c = width;
        }

        let se = config
            .se_channels()
            .map(|c| SeBlock::new("se", c, config.se_reduction, config.se_bias, seed))
            .transpose()?;
        let fc = Linear::new("fc", config.feature_dim(), config.num_classes, true, seed);

        Ok(Self {
            config,
            mode: Mode::Training,
            stem_conv,
            stem_bn,
            stages,
            se,
            fc,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim()
    }

    pub fn se_block(&self) -> Option<&SeBlock> {
        self.se.as_ref()
    }

    pub fn se_block_mut(&mut self) -> Option<&mut SeBlock> {
        self.se.as_mut()
    }

    /// Number of SE blocks in the network (0 or 1).
    pub fn se_count(&self) -> usize {
        usize::from(self.se.is_some())
    }

    pub fn stages(&self) -> &[Vec<ResidualBlock>] {
        &self.stages
    }

    pub fn classifier(&self) -> &Linear {
        &self.fc
    }

    fn check_input(&self, batch: &Tensor) -> Result<()> {
        let (h, w) = self.config.input_size;
        match *batch.shape() {
            [_, 3, bh, bw] if (bh, bw) == (h, w) => Ok(()),
            ref s => Err(Error::Dimension(format!(
                "model expects input [N,3,{h},{w}], got {s:?}"
            ))),
        }
    }

    /// Pooled features and logits.
    fn run(&self, batch: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<(Tensor, Tensor)> {
        self.check_input(batch)?;
        let gate_after = self.config.se_scheme.stages_before();
        let mut h = self.stem_conv.forward(batch, ctx)?;
        h = ops::relu(&self.stem_bn.forward(&h, ctx)?)?;
        if self.config.scale == Scale::Full {
            h = ops::max_pool2d(&h, 3, 2, 1)?;
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if gate_after == Some(i) {
                h = self.se_forward(&h, ctx)?;
            }
            for block in stage {
                h = block.forward(&h, ctx)?;
            }
        }
        if gate_after == Some(self.stages.len()) {
            h = self.se_forward(&h, ctx)?;
        }
        let features = ops::global_avg_pool(&h)?;
        let logits = self.fc.forward(&features, ctx)?;
        Ok((features, logits))
    }

    fn se_forward(&self, h: &Tensor, ctx: &mut ForwardCtx<'_>) -> Result<Tensor> {
        self.se
            .as_ref()
            .expect("SE block present for scheme")
            .forward(h, ctx)
    }

    fn require(&self, mode: Mode, what: &str) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Contract(format!(
                "{what} requires {mode:?} mode, model is in {:?} mode",
                self.mode
            )));
        }
        Ok(())
    }

    /// Inference-mode logits. No tape, no statistic updates.
    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        self.require(Mode::Inference, "forward")?;
        Ok(self.run(batch, &mut ForwardCtx::inference())?.1)
    }

    /// Inference-mode pooled features and logits from the same pass.
    pub fn forward_with_features(&self, batch: &Tensor) -> Result<(Tensor, Tensor)> {
        self.require(Mode::Inference, "forward_with_features")?;
        self.run(batch, &mut ForwardCtx::inference())
    }

    /// Penultimate (post-pooling, pre-classifier) features `[N, D]`.
    pub fn extract_features(&self, batch: &Tensor) -> Result<Tensor> {
        self.require(Mode::Inference, "extract_features")?;
        Ok(self.run(batch, &mut ForwardCtx::inference())?.0)
    }

    /// Training-mode forward: batch statistics, running-statistic updates,
    /// and every parameter watched on `tape`.
    pub fn forward_train(&mut self, batch: &Tensor, tape: &Tape) -> Result<TrainForward> {
        self.require(Mode::Training, "forward_train")?;
        let mut ctx = ForwardCtx::training(Some(tape));
        let (_, logits) = self.run(batch, &mut ctx)?;
        let (bindings, updates) = ctx.into_parts();
        let updates: HashMap<String, _> = updates.into_iter().collect();
        for bn in self.batch_norms_mut() {
            if let Some(stats) = updates.get(bn.name()) {
                bn.running = stats.clone();
            }
        }
        Ok(TrainForward { logits, bindings })
    }

    /// Copies gradients from a finished backward pass onto the parameters.
    pub fn apply_grads(&mut self, bindings: &Bindings) {
        let mut grads = bindings.grads();
        for p in self.params_mut() {
            p.grad = grads.remove(p.name());
        }
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.grad = None;
        }
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params().into_iter().find(|p| p.name() == name)
    }
}

impl Module for Model {
    /// Parameters in forward order; optimizer state relies on this order.
    fn params(&self) -> Vec<&Param> {
        let gate_after = self.config.se_scheme.stages_before();
        let mut out = self.stem_conv.params();
        out.extend(self.stem_bn.params());
        for (i, stage) in self.stages.iter().enumerate() {
            if gate_after == Some(i) {
                out.extend(self.se.iter().flat_map(|s| s.params()));
            }
            out.extend(stage.iter().flat_map(|b| b.params()));
        }
        if gate_after == Some(self.stages.len()) {
            out.extend(self.se.iter().flat_map(|s| s.params()));
        }
        out.extend(self.fc.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let gate_after = self.config.se_scheme.stages_before();
        let mut out = self.stem_conv.params_mut();
        out.extend(self.stem_bn.params_mut());
        let mut se = self.se.as_mut().map(|s| s.params_mut());
        for (i, stage) in self.stages.iter_mut().enumerate() {
            if gate_after == Some(i) {
                out.extend(se.take().into_iter().flatten());
            }
            out.extend(stage.iter_mut().flat_map(|b| b.params_mut()));
        }
        out.extend(se.into_iter().flatten());
        out.extend(self.fc.params_mut());
        out
    }

    fn batch_norms(&self) -> Vec<&BatchNorm2d> {
        let mut out = vec![&self.stem_bn];
        for stage in &self.stages {
            out.extend(stage.iter().flat_map(|b| b.batch_norms()));
        }
        out
    }

    fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm2d> {
        let mut out = vec![&mut self.stem_bn];
        for stage in &mut self.stages {
            out.extend(stage.iter_mut().flat_map(|b| b.batch_norms_mut()));
        }
        out
    }
}
