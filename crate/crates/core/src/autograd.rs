//! Reverse-mode automatic differentiation over a dynamically recorded tape.
//!
//! A forward pass appends [`Node`]s to a [`Tape`] in creation order, which is
//! automatically topological: a node's parents always precede it. [`backward`]
//! walks the tape in reverse, seeds the loss gradient with 1, and accumulates
//! each node's contribution into its parents (`+=`, so values consumed by
//! several downstream ops are handled correctly).
//!
//! Gradients are not zeroed here — a fresh tape starts clean, and parameter
//! gradients live for exactly one optimizer step.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Handle to a node on a specific tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

/// Computes per-parent gradients from the upstream gradient.
///
/// Arguments: upstream gradient (same shape as the node's value) and the
/// parent value tensors in slot order. Returns one gradient per parent slot.
pub type BackwardFn<T> = Box<dyn Fn(&Tensor<T>, &[&Tensor<T>]) -> Vec<Tensor<T>>>;

/// One recorded operation result.
pub struct Node<T> {
    value: Tensor<T>,
    grad: Option<Tensor<T>>,
    parents: Vec<NodeId>,
    backward: Option<BackwardFn<T>>,
    requires_grad: bool,
}

/// Record of one forward pass. Single-threaded by construction: a pass owns
/// its tape exclusively.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf (input or parameter). Leaves have no parents.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> NodeId {
        self.push(Node {
            value,
            grad: None,
            parents: Vec::new(),
            backward: None,
            requires_grad,
        })
    }

    /// Appends an interior node produced from `inputs`. The node requires a
    /// gradient iff any parent does; `backward` is invoked only in that case.
    ///
    /// Misuse (an input id not on this tape) is a programming error and
    /// asserts rather than returning an error.
    pub fn record(
        &mut self,
        inputs: &[NodeId],
        value: Tensor<T>,
        backward: BackwardFn<T>,
    ) -> NodeId {
        for id in inputs {
            assert!(id.0 < self.nodes.len(), "input node not on this tape");
        }
        let requires_grad = inputs.iter().any(|id| self.nodes[id.0].requires_grad);
        self.push(Node {
            value,
            grad: None,
            parents: inputs.to_vec(),
            backward: Some(backward),
            requires_grad,
        })
    }

    fn push(&mut self, node: Node<T>) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    /// Gradient accumulated at `id`, if any flowed there during [`backward`].
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.nodes[id.0].grad.as_ref()
    }

    /// Reverse pass from a scalar loss node.
    ///
    /// Seeds `d loss / d loss = 1`, then visits nodes in reverse creation
    /// order. Each visited node hands its upstream gradient to its backward
    /// closure and the per-parent results are accumulated into parents that
    /// require gradients.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        let loss_node = &self.nodes[loss.0];
        if loss_node.value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                loss_node.value.shape()
            )));
        }
        let seed = Tensor::filled(loss_node.value.shape(), T::one())
            .unwrap_or_else(|_| Tensor::scalar(T::one()));
        self.nodes[loss.0].grad = Some(seed);

        for i in (0..self.nodes.len()).rev() {
            if !self.nodes[i].requires_grad && !self.nodes[i].parents.is_empty() {
                continue;
            }
            if self.nodes[i].grad.is_none() || self.nodes[i].backward.is_none() {
                continue;
            }
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            let upstream = node.grad.as_ref().expect("checked above");
            let parent_values: Vec<&Tensor<T>> =
                node.parents.iter().map(|p| &before[p.0].value).collect();
            let backward = node.backward.as_ref().expect("checked above");
            let parent_grads = backward(upstream, &parent_values);
            assert_eq!(
                parent_grads.len(),
                node.parents.len(),
                "backward returned wrong number of gradients"
            );
            let parents = node.parents.clone();
            for (slot, grad) in parents.iter().zip(parent_grads) {
                let parent = &mut before[slot.0];
                if !parent.requires_grad {
                    continue;
                }
                assert_eq!(
                    grad.shape(),
                    parent.value.shape(),
                    "gradient shape must match parent value shape"
                );
                match &mut parent.grad {
                    Some(existing) => *existing = existing.add(&grad)?,
                    none => *none = Some(grad),
                }
            }
        }
        Ok(())
    }
}

/// Maximum relative error between the analytic gradient of `f` with respect
/// to `x` and a central finite difference with step `h` (1e-5 is the
/// conventional choice in f64).
///
/// `f` must rebuild its computation from the leaf it is given; it is called
/// once per perturbed element plus twice up front — the double evaluation
/// detects stochastic functions (active dropout), which are a contract
/// violation here.
///
/// Error metric per element: `|analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-8)`.
pub fn grad_check<F>(f: F, x: &Tensor<f64>, h: f64) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, NodeId) -> NodeId,
{
    let eval = |point: &Tensor<f64>| -> Result<f64> {
        let mut tape = Tape::new();
        let leaf = tape.leaf(point.clone(), false);
        let loss = f(&mut tape, leaf);
        tape.value(loss).item()
    };

    let probe_a = eval(x)?;
    let probe_b = eval(x)?;
    if probe_a.to_bits() != probe_b.to_bits() {
        return Err(Error::Contract(
            "function under grad_check is stochastic (two evaluations differ); \
             disable dropout before checking gradients"
                .into(),
        ));
    }

    let analytic = {
        let mut tape = Tape::new();
        let leaf = tape.leaf(x.clone(), true);
        let loss = f(&mut tape, leaf);
        if tape.value(loss).numel() != 1 {
            return Err(Error::Contract(
                "grad_check requires a scalar-valued function".into(),
            ));
        }
        tape.backward(loss)?;
        tape.grad(leaf)
            .cloned()
            .unwrap_or(Tensor::zeros(x.shape()).expect("x shape is valid"))
    };

    let mut max_err = 0.0f64;
    for i in 0..x.numel() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        let a = analytic.data()[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_err = max_err.max(err);
    }
    Ok(max_err)
}
