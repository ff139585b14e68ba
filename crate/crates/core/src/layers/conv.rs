//! 2D convolution as im2col + GEMM.
//!
//! The convolution here is cross-correlation (no kernel flip), stride 1.
//! Each sample's input windows are unrolled into a column matrix so the whole
//! spatial pass becomes one matrix product against the `[out_ch, C*kh*kw]`
//! weight matrix — the GEMM is the only hot loop in the framework.

use crate::error::{Error, Result};
use crate::tensor::{gemm_nn, gemm_nt, gemm_tn, Scalar, Tensor};

use super::Padding;

/// Output spatial size for one axis.
fn out_extent(input: usize, kernel: usize, pad: usize) -> usize {
    input + 2 * pad - kernel + 1
}

fn conv_geometry<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Result<ConvGeometry> {
    if input.rank() != 4 {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!("input must be [N,C,H,W], got {:?}", input.shape()),
        });
    }
    if weights.rank() != 4 {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!("weights must be [O,C,kh,kw], got {:?}", weights.shape()),
        });
    }
    let (n, c, h, w) = (
        input.shape()[0],
        input.shape()[1],
        input.shape()[2],
        input.shape()[3],
    );
    let (out_ch, wc, kh, kw) = (
        weights.shape()[0],
        weights.shape()[1],
        weights.shape()[2],
        weights.shape()[3],
    );
    if wc != c {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!("input has {c} channels, weights expect {wc}"),
        });
    }
    if bias.shape() != [out_ch] {
        return Err(Error::ShapeMismatch {
            op: "conv2d",
            detail: format!("bias must be [{out_ch}], got {:?}", bias.shape()),
        });
    }
    let (ph, pw) = match padding {
        Padding::Same => {
            if kh % 2 == 0 || kw % 2 == 0 {
                return Err(Error::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("same padding requires odd kernels, got {kh}x{kw}"),
                });
            }
            ((kh - 1) / 2, (kw - 1) / 2)
        }
        Padding::Valid => {
            if h < kh || w < kw {
                return Err(Error::ShapeMismatch {
                    op: "conv2d",
                    detail: format!(
                        "valid padding needs spatial dims >= {kh}x{kw}, input is {h}x{w}"
                    ),
                });
            }
            (0, 0)
        }
    };
    Ok(ConvGeometry {
        n,
        c,
        h,
        w,
        out_ch,
        kh,
        kw,
        ph,
        pw,
        oh: out_extent(h, kh, ph),
        ow: out_extent(w, kw, pw),
    })
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    out_ch: usize,
    kh: usize,
    kw: usize,
    ph: usize,
    pw: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeometry {
    fn col_rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn col_cols(&self) -> usize {
        self.oh * self.ow
    }
}

/// Unrolls one sample into `col[C*kh*kw, oh*ow]`, zero-filling where the
/// window reaches into the padding halo.
fn im2col<T: Scalar>(input: &[T], g: &ConvGeometry, col: &mut [T]) {
    let ohw = g.col_cols();
    for c in 0..g.c {
        let plane = &input[c * g.h * g.w..(c + 1) * g.h * g.w];
        for dh in 0..g.kh {
            for dw in 0..g.kw {
                let row = (c * g.kh + dh) * g.kw + dw;
                let dst_base = row * ohw;
                for oh in 0..g.oh {
                    let dst = &mut col[dst_base + oh * g.ow..dst_base + (oh + 1) * g.ow];
                    let ih = (oh + dh) as isize - g.ph as isize;
                    if ih < 0 || ih >= g.h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src_row = &plane[ih as usize * g.w..(ih as usize + 1) * g.w];
                    // valid ow range: 0 <= ow + dw - pw < w
                    let lo = g.pw.saturating_sub(dw);
                    let hi = (g.w + g.pw).saturating_sub(dw).min(g.ow);
                    dst[..lo.min(g.ow)].fill(T::zero());
                    if lo < hi {
                        let src_lo = lo + dw - g.pw;
                        dst[lo..hi].copy_from_slice(&src_row[src_lo..src_lo + (hi - lo)]);
                    }
                    if hi < g.ow {
                        dst[hi..].fill(T::zero());
                    }
                }
            }
        }
    }
}

/// Scatter-adds a column-matrix gradient back onto the input layout
/// (the adjoint of [`im2col`]).
fn col2im_accumulate<T: Scalar>(dcol: &[T], g: &ConvGeometry, dinput: &mut [T]) {
    let ohw = g.col_cols();
    for c in 0..g.c {
        let plane = &mut dinput[c * g.h * g.w..(c + 1) * g.h * g.w];
        for dh in 0..g.kh {
            for dw in 0..g.kw {
                let row = (c * g.kh + dh) * g.kw + dw;
                let src_base = row * ohw;
                for oh in 0..g.oh {
                    let ih = (oh + dh) as isize - g.ph as isize;
                    if ih < 0 || ih >= g.h as isize {
                        continue;
                    }
                    let src = &dcol[src_base + oh * g.ow..src_base + (oh + 1) * g.ow];
                    let dst_row = &mut plane[ih as usize * g.w..(ih as usize + 1) * g.w];
                    let lo = g.pw.saturating_sub(dw);
                    let hi = (g.w + g.pw).saturating_sub(dw).min(g.ow);
                    if lo < hi {
                        let dst_lo = lo + dw - g.pw;
                        for (d, &s) in dst_row[dst_lo..dst_lo + (hi - lo)].iter_mut().zip(&src[lo..hi])
                        {
                            *d = *d + s;
                        }
                    }
                }
            }
        }
    }
}

/// Stride-1 cross-correlation of `[N,C,H,W]` with `[O,C,kh,kw]` weights plus
/// a per-channel bias. `Same` zero-pads symmetrically so spatial dims are
/// preserved; `Valid` shrinks them by `kernel - 1`.
pub fn conv2d_forward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
) -> Result<Tensor<T>> {
    let g = conv_geometry(input, weights, bias, padding)?;
    let (ckk, ohw) = (g.col_rows(), g.col_cols());
    let mut out = Tensor::zeros(&[g.n, g.out_ch, g.oh, g.ow])?;
    let mut col = vec![T::zero(); ckk * ohw];
    let in_stride = g.c * g.h * g.w;
    let out_stride = g.out_ch * ohw;
    for s in 0..g.n {
        im2col(&input.data()[s * in_stride..(s + 1) * in_stride], &g, &mut col);
        let out_sample = &mut out.data_mut()[s * out_stride..(s + 1) * out_stride];
        gemm_nn(g.out_ch, ckk, ohw, weights.data(), &col, out_sample);
        for (o, row) in out_sample.chunks_mut(ohw).enumerate() {
            let b = bias.data()[o];
            for v in row {
                *v = *v + b;
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv2d_forward`] with respect to input, weights, and bias.
///
/// The column matrix is recomputed per sample rather than cached from the
/// forward pass; it trades a little compute for not holding N copies of the
/// unrolled input between passes.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    weights: &Tensor<T>,
    bias: &Tensor<T>,
    padding: Padding,
    upstream: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let g = conv_geometry(input, weights, bias, padding)?;
    let (ckk, ohw) = (g.col_rows(), g.col_cols());
    if upstream.shape() != [g.n, g.out_ch, g.oh, g.ow] {
        return Err(Error::ShapeMismatch {
            op: "conv2d_backward",
            detail: format!(
                "upstream shape {:?} does not match output [{},{},{},{}]",
                upstream.shape(),
                g.n,
                g.out_ch,
                g.oh,
                g.ow
            ),
        });
    }

    let mut dinput = Tensor::zeros(input.shape())?;
    let mut dweights = Tensor::zeros(weights.shape())?;
    let mut dbias = Tensor::zeros(&[g.out_ch])?;

    let mut col = vec![T::zero(); ckk * ohw];
    let mut dcol = vec![T::zero(); ckk * ohw];
    let mut dw_tmp = vec![T::zero(); g.out_ch * ckk];
    let in_stride = g.c * g.h * g.w;
    let out_stride = g.out_ch * ohw;

    for s in 0..g.n {
        let up_sample = &upstream.data()[s * out_stride..(s + 1) * out_stride];

        for (o, row) in up_sample.chunks(ohw).enumerate() {
            let mut acc = T::zero();
            for &v in row {
                acc = acc + v;
            }
            dbias.data_mut()[o] = dbias.data_mut()[o] + acc;
        }

        im2col(&input.data()[s * in_stride..(s + 1) * in_stride], &g, &mut col);

        // dW += up_s [O, ohw] x col^T [ohw, ckk]
        gemm_nt(g.out_ch, ohw, ckk, up_sample, &col, &mut dw_tmp);
        for (acc, &v) in dweights.data_mut().iter_mut().zip(&dw_tmp) {
            *acc = *acc + v;
        }

        // dcol = W^T [ckk, O] x up_s [O, ohw]
        gemm_tn(ckk, g.out_ch, ohw, weights.data(), up_sample, &mut dcol);
        col2im_accumulate(
            &dcol,
            &g,
            &mut dinput.data_mut()[s * in_stride..(s + 1) * in_stride],
        );
    }
    Ok((dinput, dweights, dbias))
}
