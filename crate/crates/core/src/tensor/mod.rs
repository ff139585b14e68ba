//! Dense n-dimensional arrays in row-major layout.
//!
//! Every value in the pipeline — images, feature maps, weights, logits — is a
//! [`Tensor`]. Storage is a flat contiguous buffer; there are no views or
//! stride tricks, so cloning the data on reshape keeps autograd simple and
//! convolution gets its speed from im2col + GEMM instead.

mod linalg;

pub(crate) use linalg::{gemm_nn, gemm_nt, gemm_tn};

use std::fmt::{Debug, Display};

use crate::error::{Error, Result};

/// Element type of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Dtype {
    #[serde(rename = "float32")]
    F32,
    #[serde(rename = "float64")]
    F64,
}

/// Scalar element: f32 for training and checkpoints, f64 for gradient checking.
pub trait Scalar:
    num_traits::Float + Debug + Display + Default + Send + Sync + 'static
{
    const DTYPE: Dtype;

    fn from_f64(v: f64) -> Self {
        num_traits::NumCast::from(v).expect("finite f64 converts")
    }

    fn to_f64(self) -> f64 {
        num_traits::NumCast::from(self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    const DTYPE: Dtype = Dtype::F32;
}

impl Scalar for f64 {
    const DTYPE: Dtype = Dtype::F64;
}

/// Elementwise binary operation kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
}

/// Reduction kind along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Mean,
    Max,
    /// Index of the first maximum (ties break toward the lowest index).
    Argmax,
}

/// Dense row-major n-dimensional array.
///
/// Invariants: `data.len()` equals the product of `shape`, every dimension is
/// at least 1, and rank 0 (empty shape) is a scalar holding one element.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Wraps a flat row-major buffer. Fails if the element count does not
    /// match the shape or any dimension is zero.
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!(
                "dimensions must be >= 1, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} implies {expected} elements, buffer holds {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!(
                "dimensions must be >= 1, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        })
    }

    pub fn filled(shape: &[usize], value: T) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        t.data.fill(value);
        Ok(t)
    }

    pub fn ones(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, T::one())
    }

    /// Rank-0 tensor.
    pub fn scalar(value: T) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// Fill from a generator in flat row-major order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut() -> T) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        t.data.iter_mut().for_each(|x| *x = f());
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn dtype(&self) -> Dtype {
        T::DTYPE
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Row-major strides derived from the shape.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.shape[i + 1];
        }
        strides
    }

    /// Element at a multi-index. Panics on out-of-range indices; this is a
    /// convenience for tests and small readers, not a hot path.
    pub fn at(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let mut flat = 0;
        for (axis, (&i, s)) in index.iter().zip(self.strides()).enumerate() {
            assert!(i < self.shape[axis], "index {i} out of range on axis {axis}");
            flat += i * s;
        }
        self.data[flat]
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// The single element of a one-element tensor.
    pub fn item(&self) -> Result<T> {
        if self.data.len() != 1 {
            return Err(Error::Contract(format!(
                "item() on tensor with {} elements",
                self.data.len()
            )));
        }
        Ok(self.data[0])
    }

    /// Matrix product of two rank-2 tensors: `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let (ashape, bshape) = (self.shape(), other.shape());
        if ashape.len() != 2 || bshape.len() != 2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                detail: format!("expected rank-2 operands, got {ashape:?} x {bshape:?}"),
            });
        }
        let (m, k) = (ashape[0], ashape[1]);
        let (k2, n) = (bshape[0], bshape[1]);
        if k != k2 {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                detail: format!("inner dimensions differ: {ashape:?} x {bshape:?}"),
            });
        }
        let mut out = Self::zeros(&[m, n])?;
        gemm_nn(m, k, n, &self.data, &other.data, &mut out.data);
        Ok(out)
    }

    /// Elementwise add/sub/mul. Shapes must match exactly, except that `other`
    /// may be rank-1 with length equal to the last axis (the bias-add
    /// pattern), in which case it is replicated across all leading axes.
    pub fn elementwise(&self, other: &Self, op: BinaryOp) -> Result<Self> {
        let apply = |a: T, b: T| match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
        };
        if self.shape == other.shape {
            let data = self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| apply(a, b))
                .collect();
            return Ok(Self {
                shape: self.shape.clone(),
                data,
            });
        }
        let last = self.shape.last().copied().unwrap_or(1);
        if other.rank() == 1 && other.shape[0] == last && self.rank() >= 1 {
            let mut out = self.clone();
            for row in out.data.chunks_mut(last) {
                for (o, &b) in row.iter_mut().zip(&other.data) {
                    *o = apply(*o, b);
                }
            }
            return Ok(out);
        }
        Err(Error::ShapeMismatch {
            op: "elementwise",
            detail: format!(
                "shapes {:?} and {:?} are neither equal nor bias-broadcastable",
                self.shape, other.shape
            ),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.elementwise(other, BinaryOp::Add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.elementwise(other, BinaryOp::Sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.elementwise(other, BinaryOp::Mul)
    }

    /// Reduce along one axis; output rank drops by one.
    ///
    /// `Argmax` emits indices as numeric values; ties break toward the lowest
    /// index.
    pub fn reduce(&self, axis: usize, op: ReduceOp) -> Result<Self> {
        let rank = self.rank();
        if axis >= rank {
            return Err(Error::AxisOutOfRange { axis, rank });
        }
        let dim = self.shape[axis];
        let outer: usize = self.shape[..axis].iter().product();
        let inner: usize = self.shape[axis + 1..].iter().product();
        let out_shape: Vec<usize> = self
            .shape
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, &d)| d)
            .collect();
        let mut out = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * dim * inner + i;
                let value = match op {
                    ReduceOp::Sum | ReduceOp::Mean => {
                        let mut acc = T::zero();
                        for j in 0..dim {
                            acc = acc + self.data[base + j * inner];
                        }
                        if matches!(op, ReduceOp::Mean) {
                            acc / T::from_f64(dim as f64)
                        } else {
                            acc
                        }
                    }
                    ReduceOp::Max => {
                        let mut best = self.data[base];
                        for j in 1..dim {
                            let v = self.data[base + j * inner];
                            if v > best {
                                best = v;
                            }
                        }
                        best
                    }
                    ReduceOp::Argmax => {
                        let mut best = self.data[base];
                        let mut best_j = 0usize;
                        for j in 1..dim {
                            let v = self.data[base + j * inner];
                            if v > best {
                                best = v;
                                best_j = j;
                            }
                        }
                        T::from_f64(best_j as f64)
                    }
                };
                out[o * inner + i] = value;
            }
        }
        Tensor::new(out_shape, out)
    }

    /// Same flat data, new shape; element counts must agree.
    pub fn reshape(&self, newshape: &[usize]) -> Result<Self> {
        if newshape.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!(
                "dimensions must be >= 1, got {newshape:?}"
            )));
        }
        let expected: usize = newshape.iter().product();
        if expected != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                detail: format!(
                    "cannot view {} elements as {newshape:?}",
                    self.data.len()
                ),
            });
        }
        Ok(Self {
            shape: newshape.to_vec(),
            data: self.data.clone(),
        })
    }

    /// Transpose of a rank-2 tensor.
    pub fn transpose2(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::ShapeMismatch {
                op: "transpose2",
                detail: format!("expected rank 2, got {:?}", self.shape),
            });
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Self::zeros(&[c, r])?;
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }

    /// Elementwise map into a new tensor.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, factor: T) -> Self {
        self.map(|x| x * factor)
    }

    /// Sum of the flat buffer.
    pub fn sum_all(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Lossy dtype conversion (f32 <-> f64) via f64.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::from_f64(x.to_f64())).collect(),
        }
    }
}

/// Dispatch form of the elementwise entry point, mirroring the op table.
pub fn elementwise<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, op: BinaryOp) -> Result<Tensor<T>> {
    a.elementwise(b, op)
}

/// Dispatch form of the reduction entry point.
pub fn reduce<T: Scalar>(a: &Tensor<T>, axis: usize, op: ReduceOp) -> Result<Tensor<T>> {
    a.reduce(axis, op)
}
