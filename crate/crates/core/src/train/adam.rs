use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Param;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} = {b} must lie in [0, 1)")));
            }
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::Config(format!("eps {} must be positive", self.eps)));
        }
        Ok(())
    }
}

/// First and second moments per parameter, in the order the parameters
/// are passed to [`AdamState::step`].
#[derive(Clone, Debug, Default)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// One update of every parameter from its `grad`. Moments are created
    /// lazily on the first step; later steps require the same shapes.
    pub fn step(&mut self, params: &mut [&mut Param], config: &AdamConfig) -> Result<()> {
        self.step_with_lr(params, config, config.lr)
    }

    pub fn step_with_lr(
        &mut self,
        params: &mut [&mut Param],
        config: &AdamConfig,
        lr: f64,
    ) -> Result<()> {
        if let Some(p) = params.iter().find(|p| p.grad.is_none()) {
            return Err(Error::Contract(format!(
                "parameter {} has no gradient",
                p.name()
            )));
        }
        if self.t == 0 && self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len()
            || params.iter().zip(&self.m).any(|(p, m)| p.len() != m.len())
        {
            return Err(Error::Contract(
                "optimizer state does not match the parameter list".into(),
            ));
        }
        self.t += 1;
        let (b1, b2) = (config.beta1, config.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let g = p.grad.take().expect("checked above");
            let values = p.values_mut();
            for i in 0..values.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                values[i] -= lr * m_hat / (v_hat.sqrt() + config.eps);
            }
            p.grad = Some(g);
        }
        Ok(())
    }
}
