// The guide chapters under book/src/ double as doctests: each chapter is
// attached to an empty module here so `cargo test --doc` compiles and runs
// every ```rust snippet in the book. mdbook cannot do that by itself.

#[doc = include_str!("../../../book/src/tensors.md")]
pub mod tensors {}

#[doc = include_str!("../../../book/src/autograd.md")]
pub mod autograd {}

#[doc = include_str!("../../../book/src/layers.md")]
pub mod layers {}

#[doc = include_str!("../../../book/src/convolution.md")]
pub mod convolution {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
