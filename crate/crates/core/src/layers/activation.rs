//! ReLU and inverted dropout.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Scalar, Tensor};

use super::{DropoutConfig, Mode};

/// `max(x, 0)` elementwise.
pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| if x > T::zero() { x } else { T::zero() })
}

/// Passes the upstream gradient where the forward input was strictly
/// positive; the subgradient at exactly 0 is defined as 0.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != upstream.shape() {
        return Err(Error::ShapeMismatch {
            op: "relu_backward",
            detail: format!("{:?} vs {:?}", input.shape(), upstream.shape()),
        });
    }
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.shape().to_vec(), data)
}

/// Inverted dropout.
///
/// Train mode zeroes each element independently with probability `rate` and
/// scales survivors by `1/(1-rate)`, so eval mode is the exact identity (the
/// returned tensor is a bitwise copy of the input and the mask is `None`).
/// The mask is drawn from the caller's seeded stream — dropout owns no
/// randomness of its own.
pub fn dropout_forward<T: Scalar>(
    input: &Tensor<T>,
    cfg: &DropoutConfig,
    rng: &mut SplitMix64,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    cfg.validate()?;
    if cfg.mode == Mode::Eval || cfg.rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let keep_scale = T::from_f64(1.0 / (1.0 - cfg.rate));
    let mask: Vec<T> = (0..input.numel())
        .map(|_| {
            if rng.next_f64() < cfg.rate {
                T::zero()
            } else {
                keep_scale
            }
        })
        .collect();
    let data = input
        .data()
        .iter()
        .zip(&mask)
        .map(|(&x, &m)| x * m)
        .collect();
    let out = Tensor::new(input.shape().to_vec(), data)?;
    Ok((out, Some(mask)))
}

/// Backward through the mask captured at forward time (`None` means the
/// forward pass was an identity).
pub fn dropout_backward<T: Scalar>(mask: Option<&[T]>, upstream: &Tensor<T>) -> Tensor<T> {
    match mask {
        None => upstream.clone(),
        Some(mask) => {
            let data = upstream
                .data()
                .iter()
                .zip(mask)
                .map(|(&g, &m)| g * m)
                .collect();
            Tensor::new(upstream.shape().to_vec(), data).expect("mask length matches")
        }
    }
}

/// `[N,C,H,W] -> [N, C*H*W]` per-sample row-major flattening.
pub fn flatten_forward<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    if input.rank() != 4 {
        return Err(Error::ShapeMismatch {
            op: "flatten",
            detail: format!("expected rank 4, got {:?}", input.shape()),
        });
    }
    let n = input.shape()[0];
    let features: usize = input.shape()[1..].iter().product();
    input.reshape(&[n, features])
}
