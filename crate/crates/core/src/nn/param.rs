use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::tensor::ops::RunningStats;
use crate::tensor::{Tape, Tensor};

/// A named trainable array plus its most recent gradient.
#[derive(Clone, Debug)]
pub struct Param {
    name: String,
    shape: Vec<usize>,
    value: Arc<Vec<f64>>,
    pub grad: Option<Vec<f64>>,
}

impl Param {
    pub fn new(name: impl Into<String>, shape: &[usize], value: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let n: usize = shape.iter().product();
        if n != value.len() || shape.is_empty() {
            return Err(Error::Dimension(format!(
                "parameter {name}: shape {shape:?} does not hold {} values",
                value.len()
            )));
        }
        Ok(Self {
            name,
            shape: shape.to_vec(),
            value: Arc::new(value),
            grad: None,
        })
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::filled(name, shape, 0.0)
    }

    pub fn filled(name: impl Into<String>, shape: &[usize], v: f64) -> Self {
        let n = shape.iter().product();
        Self::new(name, shape, vec![v; n]).expect("consistent shape")
    }

    /// He-normal initialization, `std = sqrt(2 / fan_in)`, drawn from a
    /// stream keyed by `(seed, name)` so a parameter's initial value does
    /// not depend on which other layers exist.
    pub fn kaiming(name: impl Into<String>, shape: &[usize], fan_in: usize, seed: u64) -> Self {
        let name = name.into();
        let std = (2.0 / fan_in as f64).sqrt();
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed ^ name_hash(&name));
        let normal = Normal::new(0.0, std).expect("finite std");
        let n = shape.iter().product();
        let value = (0..n).map(|_| normal.sample(&mut rng)).collect();
        Self::new(name, shape, value).expect("consistent shape")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    /// Mutable access; copies the buffer only if a tensor still shares it.
    pub fn values_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.value).as_mut_slice()
    }

    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.value.len() {
            return Err(Error::Dimension(format!(
                "parameter {}: expected {} values, got {}",
                self.name,
                self.value.len(),
                values.len()
            )));
        }
        self.value = Arc::new(values);
        Ok(())
    }

    /// A constant tensor sharing this parameter's buffer.
    pub fn tensor(&self) -> Tensor {
        Tensor::from_shared(self.shape.clone(), Arc::clone(&self.value))
    }
}

/// 64-bit FNV-1a, used to derive per-name seeds and content fingerprints.
pub fn name_hash(s: &str) -> u64 {
    fnv1a(s.as_bytes())
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Parameters a forward pass lifted onto a tape, by name.
#[derive(Default)]
pub struct Bindings(Vec<(String, Tensor)>);

impl Bindings {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.0.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Gradients after backward, keyed by parameter name. A parameter used
    /// more than once gets the sum of its uses, in recording order.
    pub fn grads(&self) -> HashMap<String, Vec<f64>> {
        let mut out: HashMap<String, Vec<f64>> = HashMap::new();
        for (name, t) in &self.0 {
            let Some(g) = t.grad() else { continue };
            match out.get_mut(name) {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => {
                    out.insert(name.clone(), g);
                }
            }
        }
        out
    }
}

/// State threaded through one forward pass.
///
/// Carries the mode (training uses batch statistics), the optional tape that
/// parameters get watched on, and running-statistic updates produced by
/// batch-norm layers, which the owner applies once the pass is done.
pub struct ForwardCtx<'t> {
    tape: Option<&'t Tape>,
    training: bool,
    bindings: Bindings,
    stat_updates: Vec<(String, RunningStats)>,
}

impl<'t> ForwardCtx<'t> {
    pub fn inference() -> Self {
        Self {
            tape: None,
            training: false,
            bindings: Bindings::default(),
            stat_updates: Vec::new(),
        }
    }

    pub fn training(tape: Option<&'t Tape>) -> Self {
        Self {
            training: true,
            tape,
            ..Self::inference()
        }
    }

    /// Inference-mode statistics, but parameters watched on `tape`.
    pub fn frozen_stats(tape: &'t Tape) -> Self {
        Self {
            tape: Some(tape),
            ..Self::inference()
        }
    }

    pub fn is_training(&self) -> bool {
        self.training
    }

    /// Tensor view of `p`, watched on the tape when one is present.
    pub fn param(&mut self, p: &Param) -> Result<Tensor> {
        let t = p.tensor();
        match self.tape {
            Some(tape) => {
                let watched = tape.watch(&t)?;
                self.bindings
                    .0
                    .push((p.name().to_string(), watched.clone()));
                Ok(watched)
            }
            None => Ok(t),
        }
    }

    pub(crate) fn push_stats(&mut self, layer: &str, stats: RunningStats) {
        self.stat_updates.push((layer.to_string(), stats));
    }

    pub fn into_parts(self) -> (Bindings, Vec<(String, RunningStats)>) {
        (self.bindings, self.stat_updates)
    }
}
