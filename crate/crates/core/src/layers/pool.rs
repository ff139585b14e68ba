//! 2x2 max-pooling, stride 2, non-overlapping windows.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Pools `[N,C,H,W]` down to `[N,C,H/2,W/2]` (odd trailing row/column
/// dropped) and records, per output element, the flat index of the winning
/// input element. Ties go to the first maximum in row-major window order, so
/// the backward pass routes each gradient to exactly one position.
pub fn maxpool2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    if input.rank() != 4 {
        return Err(Error::ShapeMismatch {
            op: "maxpool2",
            detail: format!("input must be [N,C,H,W], got {:?}", input.shape()),
        });
    }
    let (n, c, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    if h < 2 || w < 2 {
        return Err(Error::ShapeMismatch {
            op: "maxpool2",
            detail: format!("spatial dims must be >= 2, got {h}x{w}"),
        });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, oh, ow])?;
    let mut indices = vec![0usize; n * c * oh * ow];
    let data = input.data();
    let out_data = out.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        let out_base = plane * oh * ow;
        for i in 0..oh {
            for j in 0..ow {
                let top = base + (2 * i) * w + 2 * j;
                let window = [top, top + 1, top + w, top + w + 1];
                let mut best_idx = window[0];
                let mut best = data[window[0]];
                for &idx in &window[1..] {
                    if data[idx] > best {
                        best = data[idx];
                        best_idx = idx;
                    }
                }
                out_data[out_base + i * ow + j] = best;
                indices[out_base + i * ow + j] = best_idx;
            }
        }
    }
    Ok((out, indices))
}

/// Routes each upstream gradient element to the input position recorded at
/// pooling time; every other position receives zero.
pub fn maxpool2_backward<T: Scalar>(
    input_shape: &[usize],
    indices: &[usize],
    upstream: &Tensor<T>,
) -> Result<Tensor<T>> {
    if upstream.numel() != indices.len() {
        return Err(Error::ShapeMismatch {
            op: "maxpool2_backward",
            detail: format!(
                "upstream has {} elements, pooling recorded {}",
                upstream.numel(),
                indices.len()
            ),
        });
    }
    let mut dinput = Tensor::zeros(input_shape)?;
    let d = dinput.data_mut();
    for (&idx, &g) in indices.iter().zip(upstream.data()) {
        d[idx] = d[idx] + g;
    }
    Ok(dinput)
}
