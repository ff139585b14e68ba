//! Row-wise softmax and the fused softmax/cross-entropy loss.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Numerically stabilized softmax over the last axis of `[N,K]` logits:
/// `exp(x - rowmax) / sum(exp(x - rowmax))`.
pub fn softmax_forward<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    if logits.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "softmax",
            detail: format!("expected [N,K], got {:?}", logits.shape()),
        });
    }
    if !logits.all_finite() {
        return Err(Error::Numeric("softmax input contains non-finite logits".into()));
    }
    let k = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k) {
        let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(out)
}

/// Jacobian-vector product of softmax: `s * (up - <up, s>)` per row.
pub fn softmax_backward<T: Scalar>(softmax: &Tensor<T>, upstream: &Tensor<T>) -> Result<Tensor<T>> {
    if softmax.shape() != upstream.shape() {
        return Err(Error::ShapeMismatch {
            op: "softmax_backward",
            detail: format!("{:?} vs {:?}", softmax.shape(), upstream.shape()),
        });
    }
    let k = softmax.shape()[1];
    let mut out = Tensor::zeros(softmax.shape())?;
    for ((s_row, u_row), o_row) in softmax
        .data()
        .chunks(k)
        .zip(upstream.data().chunks(k))
        .zip(out.data_mut().chunks_mut(k))
    {
        let mut dot = T::zero();
        for (&s, &u) in s_row.iter().zip(u_row) {
            dot = dot + s * u;
        }
        for ((o, &s), &u) in o_row.iter_mut().zip(s_row).zip(u_row) {
            *o = s * (u - dot);
        }
    }
    Ok(out)
}

fn validate_onehot<T: Scalar>(onehot: &Tensor<T>, n: usize, k: usize) -> Result<()> {
    if onehot.shape() != [n, k] {
        return Err(Error::Label(format!(
            "one-hot labels must be [{n},{k}], got {:?}",
            onehot.shape()
        )));
    }
    for (i, row) in onehot.data().chunks(k).enumerate() {
        let ones = row.iter().filter(|&&v| v == T::one()).count();
        let zeros = row.iter().filter(|&&v| v == T::zero()).count();
        if ones != 1 || zeros != k - 1 {
            return Err(Error::Label(format!(
                "row {i} is not one-hot (needs exactly one 1 and {k} entries in {{0,1}})"
            )));
        }
    }
    Ok(())
}

/// Mean cross-entropy of `[N,K]` logits against one-hot labels, fused in
/// log-sum-exp form so no small probability is ever materialized:
/// `loss = (1/N) * sum_n (logsumexp(logits_n) - logits_n[y_n])`.
///
/// Returns the scalar loss together with the softmax probabilities the
/// backward pass needs.
pub fn softmax_cross_entropy_forward<T: Scalar>(
    logits: &Tensor<T>,
    onehot: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>)> {
    if logits.rank() != 2 {
        return Err(Error::ShapeMismatch {
            op: "softmax_cross_entropy",
            detail: format!("expected [N,K] logits, got {:?}", logits.shape()),
        });
    }
    let (n, k) = (logits.shape()[0], logits.shape()[1]);
    validate_onehot(onehot, n, k)?;
    if !logits.all_finite() {
        return Err(Error::Numeric(
            "softmax_cross_entropy input contains non-finite logits".into(),
        ));
    }
    let mut total = T::zero();
    for (row, labels) in logits.data().chunks(k).zip(onehot.data().chunks(k)) {
        let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        let mut true_logit = T::zero();
        for (&x, &y) in row.iter().zip(labels) {
            sum = sum + (x - max).exp();
            if y == T::one() {
                true_logit = x;
            }
        }
        total = total + (max + sum.ln() - true_logit);
    }
    let loss = Tensor::scalar(total / T::from_f64(n as f64));
    let probs = softmax_forward(logits)?;
    Ok((loss, probs))
}

/// `d loss / d logits = (softmax - onehot) * upstream / N`.
pub fn softmax_cross_entropy_backward<T: Scalar>(
    softmax: &Tensor<T>,
    onehot: &Tensor<T>,
    upstream: T,
) -> Result<Tensor<T>> {
    let n = softmax.shape()[0];
    let scale = upstream / T::from_f64(n as f64);
    Ok(softmax.sub(onehot)?.scale(scale))
}
