//! Dense f64 tensors with tape-based reverse-mode differentiation.
//!
//! A [`Tensor`] is an immutable value: a shape plus a shared, row-major data
//! buffer. Tensors become differentiable by being *watched* on a [`Tape`].
//! Every operation that receives at least one watched input records a node on
//! that tape holding its backward rule; [`Tensor::backward`] replays those
//! rules in reverse recording order and leaves a gradient on every watched
//! leaf reachable from the loss.
//!
//! Reductions inside every operation run in a fixed row-major order, so the
//! same inputs always produce bit-identical outputs and gradients.

mod gemm;
pub mod ops;
mod tape;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub(crate) use tape::NodeRef;
pub use tape::Tape;

#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<Vec<f64>>,
    node: Option<NodeRef>,
}

impl Tensor {
    /// Builds a constant tensor. Fails when `shape` has a zero axis or its
    /// product disagrees with `data.len()`.
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        check_shape(shape, data.len())?;
        Ok(Self {
            shape: shape.to_vec(),
            data: Arc::new(data),
            node: None,
        })
    }

    pub(crate) fn from_shared(shape: Vec<usize>, data: Arc<Vec<f64>>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self {
            shape,
            data,
            node: None,
        }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: &[usize], value: f64) -> Result<Self> {
        let n = shape.iter().product();
        Self::new(shape, vec![value; n])
    }

    pub fn scalar(value: f64) -> Self {
        Self::from_shared(vec![1], Arc::new(vec![value]))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn shared_data(&self) -> &Arc<Vec<f64>> {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::Contract(format!(
                "item() needs a one-element tensor, got shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    /// True when this tensor participates in a recorded computation.
    pub fn requires_grad(&self) -> bool {
        self.node.is_some()
    }

    pub(crate) fn node(&self) -> Option<&NodeRef> {
        self.node.as_ref()
    }

    pub(crate) fn with_node(mut self, node: NodeRef) -> Self {
        self.node = Some(node);
        self
    }

    /// Gradient of the last backward pass with respect to this tensor.
    ///
    /// Only watched leaves keep gradients; intermediate results return `None`.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.node.as_ref().and_then(|n| n.tape.grad_of(n.id))
    }

    /// A constant copy sharing the same buffer, detached from any tape.
    pub fn detach(&self) -> Tensor {
        Self {
            shape: self.shape.clone(),
            data: Arc::clone(&self.data),
            node: None,
        }
    }

    /// Same data viewed under a new shape with the same element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        ops::reshape(self, shape)
    }

    /// Runs reverse-mode differentiation from this scalar.
    pub fn backward(&self) -> Result<()> {
        if self.data.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.shape
            )));
        }
        let node = self
            .node
            .as_ref()
            .ok_or_else(|| Error::Contract("loss is not recorded on any tape".to_string()))?;
        node.tape.backward_from(node.id, 1.0)
    }

    /// Value at a multi-index. Panics on out-of-range indices.
    pub fn at(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        let mut flat = 0;
        for (i, (&ix, &dim)) in index.iter().zip(&self.shape).enumerate() {
            assert!(ix < dim, "index {ix} out of range on axis {i}");
            flat = flat * dim + ix;
        }
        self.data[flat]
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview: Vec<_> = self.data.iter().take(8).collect();
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &preview)
            .field("requires_grad", &self.requires_grad())
            .finish()
    }
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Dimension(format!(
            "shape {shape:?} must be non-empty with positive axes"
        )));
    }
    let n: usize = shape.iter().product();
    if n != len {
        return Err(Error::Dimension(format!(
            "shape {shape:?} holds {n} elements but data has {len}"
        )));
    }
    Ok(())
}
