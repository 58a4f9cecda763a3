use std::cell::RefCell;
use std::rc::Rc;

use super::Tensor;
use crate::error::{Error, Result};

/// Maps the upstream gradient of one node to gradients of its recorded inputs.
type BackwardFn = Box<dyn FnOnce(&[f64]) -> Vec<(usize, Vec<f64>)>>;

struct Node {
    len: usize,
    /// `None` for watched leaves.
    backward: Option<BackwardFn>,
}

#[derive(Default)]
struct Inner {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
    consumed: bool,
}

/// Ordered record of the operations of one forward pass.
///
/// Nodes are appended as operations run, so every node's inputs precede it.
/// A tape is single-use: one backward pass consumes it, after which it only
/// serves gradient lookups for its leaves.
#[derive(Clone, Default)]
pub struct Tape(Rc<RefCell<Inner>>);

#[derive(Clone)]
pub(crate) struct NodeRef {
    pub(crate) tape: Tape,
    pub(crate) id: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `tensor` as a differentiable leaf and returns a handle
    /// sharing its buffer.
    pub fn watch(&self, tensor: &Tensor) -> Result<Tensor> {
        let id = self.push(tensor.len(), None)?;
        Ok(tensor.detach().with_node(NodeRef {
            tape: self.clone(),
            id,
        }))
    }

    /// Number of recorded nodes, leaves included.
    pub fn len(&self) -> usize {
        self.0.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_consumed(&self) -> bool {
        self.0.borrow().consumed
    }

    fn push(&self, len: usize, backward: Option<BackwardFn>) -> Result<usize> {
        let mut inner = self.0.borrow_mut();
        if inner.consumed {
            return Err(Error::ConsumedTape);
        }
        inner.nodes.push(Node { len, backward });
        Ok(inner.nodes.len() - 1)
    }

    fn same(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn grad_of(&self, id: usize) -> Option<Vec<f64>> {
        self.0.borrow().grads.get(id).cloned().flatten()
    }

    pub(crate) fn backward_from(&self, root: usize, seed: f64) -> Result<()> {
        let mut nodes = {
            let mut inner = self.0.borrow_mut();
            if inner.consumed {
                return Err(Error::ConsumedTape);
            }
            inner.consumed = true;
            std::mem::take(&mut inner.nodes)
        };

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[root] = Some(vec![seed; nodes[root].len]);
        for i in (0..=root).rev() {
            let Some(g) = grads[i].take() else { continue };
            match nodes[i].backward.take() {
                Some(rule) => {
                    for (j, gj) in rule(&g) {
                        debug_assert!(j < i, "tape order violated");
                        accumulate(&mut grads[j], gj);
                    }
                }
                None => grads[i] = Some(g),
            }
        }
        drop(nodes);
        self.0.borrow_mut().grads = grads;
        Ok(())
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, g: Vec<f64>) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.iter_mut().zip(&g) {
                *a += b;
            }
        }
        None => *slot = Some(g),
    }
}

/// Per-input gradients produced by a backward rule; `None` where the input
/// needs no gradient.
pub(crate) type InputGrads = Vec<Option<Vec<f64>>>;

/// Wraps a freshly computed output and, if any input is on a tape, records
/// `backward` for it.
///
/// `backward` receives the upstream gradient and a mask telling which inputs
/// need gradients. It must capture buffers, never tensors, so the tape holds
/// no reference cycle back to itself.
pub(crate) fn record<F>(
    inputs: &[&Tensor],
    shape: Vec<usize>,
    data: Vec<f64>,
    backward: F,
) -> Result<Tensor>
where
    F: FnOnce(&[f64], &[bool]) -> InputGrads + 'static,
{
    let out = Tensor::from_shared(shape, data.into());
    let mut tape: Option<&Tape> = None;
    for t in inputs {
        if let Some(node) = t.node() {
            match tape {
                None => tape = Some(&node.tape),
                Some(existing) if !existing.same(&node.tape) => {
                    return Err(Error::Contract(
                        "operation mixes tensors from different tapes".to_string(),
                    ))
                }
                Some(_) => {}
            }
        }
    }
    let Some(tape) = tape else { return Ok(out) };

    let ids: Vec<Option<usize>> = inputs.iter().map(|t| t.node().map(|n| n.id)).collect();
    let needs: Vec<bool> = ids.iter().map(Option::is_some).collect();
    let rule: BackwardFn = Box::new(move |g| {
        let grads = backward(g, &needs);
        debug_assert_eq!(grads.len(), ids.len());
        grads
            .into_iter()
            .zip(&ids)
            .filter_map(|(grad, id)| Some((((*id)?), grad?)))
            .collect()
    });
    let id = tape.push(out.len(), Some(rule))?;
    let tape = tape.clone();
    Ok(out.with_node(NodeRef { tape, id }))
}
