//! The classifier: parameter storage, He-initialized build, forward passes,
//! and binary checkpoints.

mod checkpoint;
mod labels;
mod spec;

pub use checkpoint::{load, save, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use labels::{ClassLabel, CLASS_NAMES, NUM_CLASSES};
pub use spec::{ModelSpec, PaddingPolicy, CANONICAL_DENSE_UNITS, CANONICAL_FILTERS, CANONICAL_INPUT};

pub use crate::layers::Mode;

use crate::autograd::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::layers::{self, DropoutConfig};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// A parameter tensor with its stable layer-order name.
#[derive(Debug, Clone)]
pub struct NamedTensor {
    pub name: String,
    pub tensor: Tensor<f32>,
}

/// Handles into one wired forward pass.
pub struct ForwardGraph {
    /// Parameter leaves, in the same order as [`Model::parameters`].
    pub params: Vec<NodeId>,
    /// Logits node, shape `[N, 10]` (no softmax applied).
    pub logits: NodeId,
}

/// The assembled classifier. Parameters are owned here and copied onto a
/// fresh tape for every forward pass; in eval mode the model is immutable and
/// safe to share across threads.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    params: Vec<NamedTensor>,
}

impl Model {
    /// He-initializes all parameters from the seed's init stream: weights are
    /// normal with std `sqrt(2 / fan_in)`, biases zero. Two builds from the
    /// same seed are bit-identical.
    pub fn build(spec: &ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = SplitMix64::for_purpose(seed, "init");
        let mut params = Vec::new();
        for (name, shape) in spec.parameter_shapes()? {
            let tensor = if name.ends_with(".bias") {
                Tensor::zeros(&shape)?
            } else {
                let fan_in: usize = match shape.len() {
                    4 => shape[1] * shape[2] * shape[3],
                    2 => shape[0],
                    _ => unreachable!("parameters are conv or dense weights"),
                };
                let std = (2.0 / fan_in as f64).sqrt();
                Tensor::from_fn(&shape, || (rng.next_gaussian() * std) as f32)?
            };
            params.push(NamedTensor { name, tensor });
        }
        Ok(Self {
            spec: spec.clone(),
            params,
        })
    }

    /// Restores a model from spec + parameter tensors (checkpoint loading).
    pub(crate) fn from_parts(spec: ModelSpec, params: Vec<NamedTensor>) -> Result<Self> {
        spec.validate()?;
        let expected = spec.parameter_shapes()?;
        if expected.len() != params.len() {
            return Err(Error::Spec(format!(
                "expected {} parameter tensors, got {}",
                expected.len(),
                params.len()
            )));
        }
        for ((name, shape), p) in expected.iter().zip(&params) {
            if *name != p.name || shape != &p.tensor.shape().to_vec() {
                return Err(Error::Spec(format!(
                    "parameter `{}` {:?} does not match spec slot `{name}` {shape:?}",
                    p.name,
                    p.tensor.shape()
                )));
            }
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn parameters(&self) -> &[NamedTensor] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [NamedTensor] {
        &mut self.params
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    /// Records the whole network onto `tape` and returns the parameter leaves
    /// plus the logits node. In train mode parameters require gradients and
    /// dropout is live (consuming `rng`); in eval mode dropout is the
    /// identity and nothing requires gradients.
    pub fn wire(
        &self,
        tape: &mut Tape<f32>,
        batch: &Tensor<f32>,
        mode: Mode,
        rng: &mut SplitMix64,
    ) -> Result<ForwardGraph> {
        let (h, w) = self.spec.input_size;
        if batch.rank() != 4 || batch.shape()[1] != self.spec.channels {
            return Err(Error::ShapeMismatch {
                op: "forward",
                detail: format!(
                    "batch must be [N,{},{h},{w}], got {:?}",
                    self.spec.channels,
                    batch.shape()
                ),
            });
        }
        if batch.shape()[2] != h || batch.shape()[3] != w {
            return Err(Error::ShapeMismatch {
                op: "forward",
                detail: format!(
                    "batch spatial dims {:?} do not match spec input {h}x{w}",
                    &batch.shape()[2..]
                ),
            });
        }
        let requires_grad = mode == Mode::Train;
        let params: Vec<NodeId> = self
            .params
            .iter()
            .map(|p| tape.leaf(p.tensor.clone(), requires_grad))
            .collect();

        let conv_dropout = DropoutConfig::new(self.spec.conv_dropout, mode)?;
        let dense_dropout = DropoutConfig::new(self.spec.dense_dropout, mode)?;

        let mut x = tape.leaf(batch.clone(), false);
        let mut param_ix = 0;
        for block in 0..self.spec.blocks() {
            for conv in 0..self.spec.convs_per_block {
                let padding = self.spec.padding_policy[block * self.spec.convs_per_block + conv];
                let w_id = params[param_ix];
                let b_id = params[param_ix + 1];
                param_ix += 2;
                x = layers::conv2d(tape, x, w_id, b_id, padding)?;
                x = layers::relu(tape, x);
            }
            x = layers::maxpool2(tape, x)?;
            x = layers::dropout(tape, x, conv_dropout, rng)?;
        }
        x = layers::flatten(tape, x)?;
        x = layers::dense(tape, x, params[param_ix], params[param_ix + 1])?;
        x = layers::relu(tape, x);
        x = layers::dropout(tape, x, dense_dropout, rng)?;
        let logits = layers::dense(tape, x, params[param_ix + 2], params[param_ix + 3])?;

        Ok(ForwardGraph { params, logits })
    }

    /// Forward pass. Eval mode returns softmax probabilities (rows sum to 1);
    /// train mode returns raw logits — loss fusion happens in the training
    /// step.
    pub fn forward(
        &self,
        batch: &Tensor<f32>,
        mode: Mode,
        rng: &mut SplitMix64,
    ) -> Result<Tensor<f32>> {
        let mut tape = Tape::new();
        let graph = self.wire(&mut tape, batch, mode, rng)?;
        let logits = tape.value(graph.logits);
        match mode {
            Mode::Train => Ok(logits.clone()),
            Mode::Eval => layers::softmax_forward(logits),
        }
    }
}

#[cfg(test)]
mod tests;
