//! capvis — a from-scratch deep-learning micro-framework for 10-way
//! capsule-endoscopy image classification.
//!
//! Everything is built from first principles on one dense [`tensor::Tensor`]
//! type: a reverse-mode [`autograd`] tape, [`layers`] kernels (im2col
//! convolution, max-pooling, inverted dropout, dense, fused
//! softmax/cross-entropy), the 5-block [`model`] with binary checkpoints, the
//! Adam [`optim`]izer, a deterministic [`data`] pipeline, and the full
//! [`metrics`] suite (per-class precision/recall/F1/specificity, balanced
//! accuracy, one-vs-rest ROC-AUC).
//!
//! The guide in `book/` walks through each concept; its code snippets compile
//! and run as doctests (see the `book` module in this crate's source).
//!
//! # Quick taste
//!
//! ```
//! use capvis::model::{Mode, Model, ModelSpec, PaddingPolicy};
//! use capvis::rng::SplitMix64;
//! use capvis::tensor::Tensor;
//!
//! # fn main() -> capvis::Result<()> {
//! // A reduced spec keeps the example fast; `ModelSpec::canonical()` is the
//! // full 5-block classifier.
//! let spec = ModelSpec::miniature((12, 12), &[4, 8], 16, PaddingPolicy::BlockSameValid)?;
//! let model = Model::build(&spec, 42)?;
//! let batch = Tensor::zeros(&[2, 3, 12, 12])?;
//! let probs = model.forward(&batch, Mode::Eval, &mut SplitMix64::new(0))?;
//! assert_eq!(probs.shape(), &[2, 10]);
//! # Ok(())
//! # }
//! ```

pub mod autograd;
pub mod data;
pub mod error;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod rng;
pub mod tensor;

mod book;

pub use error::{Error, Result};
