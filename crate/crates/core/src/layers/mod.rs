//! Forward and backward kernels for every layer in the classifier — 3x3
//! convolution, 2x2 max-pooling, ReLU, inverted dropout, flatten, dense,
//! softmax, and the fused softmax/cross-entropy loss — plus tape-recording
//! wrappers that wire each kernel pair into the autograd graph.
//!
//! Kernels are pure functions of their inputs (dropout additionally takes an
//! explicit PRNG state), so they can be unit-tested and gradient-checked in
//! isolation.

mod activation;
mod conv;
mod dense;
mod pool;
mod softmax;

pub use activation::{
    dropout_backward, dropout_forward, flatten_forward, relu_backward, relu_forward,
};
pub use conv::{conv2d_backward, conv2d_forward};
pub use dense::{dense_backward, dense_forward};
pub use pool::{maxpool2_backward, maxpool2_forward};
pub use softmax::{
    softmax_backward, softmax_cross_entropy_backward, softmax_cross_entropy_forward,
    softmax_forward,
};

use crate::autograd::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Scalar, Tensor};

/// Zero-padding policy of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Symmetric zero-padding preserving spatial dims (odd kernels only).
    Same,
    /// No padding; spatial dims shrink by `kernel - 1`.
    Valid,
}

/// Train/eval switch. Only dropout behaves differently between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Convolution parameters: `[out_ch, in_ch, 3, 3]` weights and per-channel bias.
#[derive(Debug, Clone)]
pub struct ConvParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub padding: Padding,
}

impl<T: Scalar> ConvParams<T> {
    /// Validates the 3x3 kernel contract.
    pub fn new(weights: Tensor<T>, bias: Tensor<T>, padding: Padding) -> Result<Self> {
        if weights.rank() != 4 || weights.shape()[2] != 3 || weights.shape()[3] != 3 {
            return Err(Error::ShapeMismatch {
                op: "ConvParams",
                detail: format!("weights must be [O,C,3,3], got {:?}", weights.shape()),
            });
        }
        if bias.shape() != [weights.shape()[0]] {
            return Err(Error::ShapeMismatch {
                op: "ConvParams",
                detail: format!(
                    "bias must be [{}], got {:?}",
                    weights.shape()[0],
                    bias.shape()
                ),
            });
        }
        Ok(Self {
            weights,
            bias,
            padding,
        })
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d_forward(input, &self.weights, &self.bias, self.padding)
    }
}

/// Dense-layer parameters: `[in_features, out_features]` weights and bias.
#[derive(Debug, Clone)]
pub struct DenseParams<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> DenseParams<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weights.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "DenseParams",
                detail: format!("weights must be [in,out], got {:?}", weights.shape()),
            });
        }
        if bias.shape() != [weights.shape()[1]] {
            return Err(Error::ShapeMismatch {
                op: "DenseParams",
                detail: format!(
                    "bias must be [{}], got {:?}",
                    weights.shape()[1],
                    bias.shape()
                ),
            });
        }
        if !weights.all_finite() || !bias.all_finite() {
            return Err(Error::Numeric("dense parameters must be finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        dense_forward(input, &self.weights, &self.bias)
    }
}

/// Dropout rate and mode. The canonical model uses 0.25 after each pooling
/// layer and 0.40 after the wide dense layer.
#[derive(Debug, Clone, Copy)]
pub struct DropoutConfig {
    pub rate: f64,
    pub mode: Mode,
}

impl DropoutConfig {
    pub fn new(rate: f64, mode: Mode) -> Result<Self> {
        let cfg = Self { rate, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0,1), got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

// ── Tape-recording wrappers ──
//
// Each wrapper runs the forward kernel, then records a node whose backward
// closure calls the matching backward kernel. Parent values are read back
// from the tape at backward time; only small auxiliary state (pool indices,
// dropout masks, softmax outputs) is captured.

/// Convolution node over `(input, weights, bias)` parents.
pub fn conv2d<T: Scalar>(
    tape: &mut Tape<T>,
    input: NodeId,
    weights: NodeId,
    bias: NodeId,
    padding: Padding,
) -> Result<NodeId> {
    let value = conv2d_forward(tape.value(input), tape.value(weights), tape.value(bias), padding)?;
    Ok(tape.record(
        &[input, weights, bias],
        value,
        Box::new(move |up, parents| {
            let (di, dw, db) = conv2d_backward(parents[0], parents[1], parents[2], padding, up)
                .expect("shapes were validated in forward");
            vec![di, dw, db]
        }),
    ))
}

pub fn maxpool2<T: Scalar>(tape: &mut Tape<T>, input: NodeId) -> Result<NodeId> {
    let (value, indices) = maxpool2_forward(tape.value(input))?;
    let input_shape = tape.value(input).shape().to_vec();
    Ok(tape.record(
        &[input],
        value,
        Box::new(move |up, _| {
            vec![maxpool2_backward(&input_shape, &indices, up)
                .expect("shapes were validated in forward")]
        }),
    ))
}

pub fn relu<T: Scalar>(tape: &mut Tape<T>, input: NodeId) -> NodeId {
    let value = relu_forward(tape.value(input));
    tape.record(
        &[input],
        value,
        Box::new(|up, parents| {
            vec![relu_backward(parents[0], up).expect("same shape as forward")]
        }),
    )
}

pub fn dropout<T: Scalar>(
    tape: &mut Tape<T>,
    input: NodeId,
    cfg: DropoutConfig,
    rng: &mut SplitMix64,
) -> Result<NodeId> {
    let (value, mask) = dropout_forward(tape.value(input), &cfg, rng)?;
    Ok(tape.record(
        &[input],
        value,
        Box::new(move |up, _| vec![dropout_backward(mask.as_deref(), up)]),
    ))
}

pub fn flatten<T: Scalar>(tape: &mut Tape<T>, input: NodeId) -> Result<NodeId> {
    let value = flatten_forward(tape.value(input))?;
    let input_shape = tape.value(input).shape().to_vec();
    Ok(tape.record(
        &[input],
        value,
        Box::new(move |up, _| vec![up.reshape(&input_shape).expect("same element count")]),
    ))
}

pub fn dense<T: Scalar>(
    tape: &mut Tape<T>,
    input: NodeId,
    weights: NodeId,
    bias: NodeId,
) -> Result<NodeId> {
    let value = dense_forward(tape.value(input), tape.value(weights), tape.value(bias))?;
    Ok(tape.record(
        &[input, weights, bias],
        value,
        Box::new(|up, parents| {
            let (di, dw, db) = dense_backward(parents[0], parents[1], up)
                .expect("shapes were validated in forward");
            vec![di, dw, db]
        }),
    ))
}

pub fn softmax<T: Scalar>(tape: &mut Tape<T>, logits: NodeId) -> Result<NodeId> {
    let value = softmax_forward(tape.value(logits))?;
    let saved = value.clone();
    Ok(tape.record(
        &[logits],
        value,
        Box::new(move |up, _| {
            vec![softmax_backward(&saved, up).expect("same shape as forward")]
        }),
    ))
}

/// Fused loss node; `onehot` is normally a non-gradient leaf. Its gradient
/// slot is still populated (the tape contract wants one per parent) but is
/// only accumulated if someone marked the labels as requiring gradients.
pub fn softmax_cross_entropy<T: Scalar>(
    tape: &mut Tape<T>,
    logits: NodeId,
    onehot: NodeId,
) -> Result<NodeId> {
    let (loss, probs) = softmax_cross_entropy_forward(tape.value(logits), tape.value(onehot))?;
    Ok(tape.record(
        &[logits, onehot],
        loss,
        Box::new(move |up, parents| {
            let g = up.item().expect("loss is scalar");
            let dlogits = softmax_cross_entropy_backward(&probs, parents[1], g)
                .expect("shapes were validated in forward");
            // cross-entropy is not differentiated w.r.t. the labels; zeros
            // keep the slot well-formed
            let dlabels = Tensor::zeros(parents[1].shape()).expect("valid shape");
            vec![dlogits, dlabels]
        }),
    ))
}
