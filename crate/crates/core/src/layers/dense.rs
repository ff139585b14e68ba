//! Fully connected layer: `out = input * W + bias`.

use crate::error::{Error, Result};
use crate::tensor::{gemm_nt, gemm_tn, Scalar, Tensor};

pub fn dense_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    if input.rank() != 2 || weights.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "dense",
            detail: format!(
                "expected [N,in] x [in,out], got {:?} x {:?}",
                input.shape(),
                weights.shape()
            ),
        });
    }
    if input.shape()[1] != weights.shape()[0] || bias.shape() != [weights.shape()[1]] {
        return Err(Error::ShapeMismatch {
            op: "dense",
            detail: format!(
                "input {:?}, weights {:?}, bias {:?}",
                input.shape(),
                weights.shape(),
                bias.shape()
            ),
        });
    }
    input.matmul(weights)?.add(bias)
}

/// Returns `(d_input, d_weights, d_bias)`.
pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, in_f) = (input.shape()[0], input.shape()[1]);
    let out_f = weights.shape()[1];
    if upstream.shape() != [n, out_f] {
        return Err(Error::ShapeMismatch {
            op: "dense_backward",
            detail: format!("upstream {:?}, expected [{n},{out_f}]", upstream.shape()),
        });
    }
    // dX [N,in] = up [N,out] x W^T; W stored [in,out] is exactly the [n,k]
    // layout gemm_nt wants.
    let mut dinput = Tensor::zeros(&[n, in_f])?;
    gemm_nt(n, out_f, in_f, upstream.data(), weights.data(), dinput.data_mut());

    // dW [in,out] = X^T x up
    let mut dweights = Tensor::zeros(&[in_f, out_f])?;
    gemm_tn(in_f, n, out_f, input.data(), upstream.data(), dweights.data_mut());

    // dB = column sums of up
    let mut dbias = Tensor::zeros(&[out_f])?;
    for row in upstream.data().chunks(out_f) {
        for (b, &u) in dbias.data_mut().iter_mut().zip(row) {
            *b = *b + u;
        }
    }
    Ok((dinput, dweights, dbias))
}
