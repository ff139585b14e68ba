//! The three GEMM variants every layer is built on.
//!
//! All loops accumulate each output element in a fixed sequential order, so
//! results are bit-identical run to run regardless of the rayon thread count:
//! parallelism is only ever over disjoint output rows.

use rayon::prelude::*;

use super::Scalar;

/// Below this many multiply-adds the rayon fork/join overhead outweighs the
/// work; stay on the calling thread.
const PAR_THRESHOLD: usize = 32_768;

/// `out[m,n] = a[m,k] * b[k,n]`, all row-major. Overwrites `out`.
///
/// Loop order is i-p-j: the inner axpy streams one row of `b` into one row of
/// `out`, which the auto-vectorizer turns into FMA over contiguous memory.
pub fn gemm_nn<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    let row = |i: usize, out_row: &mut [T]| {
        out_row.fill(T::zero());
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &av) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o = *o + av * bv;
            }
        }
    };
    if m * k * n < PAR_THRESHOLD {
        for (i, out_row) in out.chunks_mut(n).enumerate() {
            row(i, out_row);
        }
    } else {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out_row)| row(i, out_row));
    }
}

/// `out[m,n] = a[m,k] * b[n,k]^T`: `b` is stored row-major as `[n,k]` and used
/// transposed. Each output element is a dot product of two contiguous rows.
pub fn gemm_nt<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    let row = |i: usize, out_row: &mut [T]| {
        let a_row = &a[i * k..(i + 1) * k];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc = acc + av * bv;
            }
            *o = acc;
        }
    };
    if m * k * n < PAR_THRESHOLD {
        for (i, out_row) in out.chunks_mut(n).enumerate() {
            row(i, out_row);
        }
    } else {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out_row)| row(i, out_row));
    }
}

/// `out[m,n] = a[k,m]^T * b[k,n]`: `a` is stored row-major as `[k,m]` and used
/// transposed. Per output row the p-loop gathers a strided column of `a` and
/// streams rows of `b`.
pub fn gemm_tn<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], out: &mut [T]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    let row = |i: usize, out_row: &mut [T]| {
        out_row.fill(T::zero());
        for p in 0..k {
            let av = a[p * m + i];
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o = *o + av * bv;
            }
        }
    };
    if m * k * n < PAR_THRESHOLD {
        for (i, out_row) in out.chunks_mut(n).enumerate() {
            row(i, out_row);
        }
    } else {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, out_row)| row(i, out_row));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    out[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        out
    }

    #[test]
    fn variants_agree_with_naive_product() {
        let mut rng = crate::rng::SplitMix64::new(5);
        for &(m, k, n) in &[(1, 1, 1), (2, 3, 4), (5, 7, 3), (16, 16, 16), (33, 9, 41)] {
            let a: Vec<f64> = (0..m * k).map(|_| rng.next_f64() - 0.5).collect();
            let b: Vec<f64> = (0..k * n).map(|_| rng.next_f64() - 0.5).collect();
            let expect = naive(m, k, n, &a, &b);

            let mut out = vec![0.0; m * n];
            gemm_nn(m, k, n, &a, &b, &mut out);
            assert_close(&out, &expect);

            // b transposed into [n,k]
            let mut bt = vec![0.0; n * k];
            for p in 0..k {
                for j in 0..n {
                    bt[j * k + p] = b[p * n + j];
                }
            }
            gemm_nt(m, k, n, &a, &bt, &mut out);
            assert_close(&out, &expect);

            // a transposed into [k,m]
            let mut at = vec![0.0; k * m];
            for i in 0..m {
                for p in 0..k {
                    at[p * m + i] = a[i * k + p];
                }
            }
            gemm_tn(m, k, n, &at, &b, &mut out);
            assert_close(&out, &expect);
        }
    }

    #[test]
    fn large_parallel_path_matches_serial() {
        let mut rng = crate::rng::SplitMix64::new(9);
        let (m, k, n) = (64, 48, 80);
        let a: Vec<f64> = (0..m * k).map(|_| rng.next_f64() - 0.5).collect();
        let b: Vec<f64> = (0..k * n).map(|_| rng.next_f64() - 0.5).collect();
        let mut out = vec![0.0; m * n];
        gemm_nn(m, k, n, &a, &b, &mut out);
        assert_close(&out, &naive(m, k, n, &a, &b));
    }

    fn assert_close(got: &[f64], expect: &[f64]) {
        for (g, e) in got.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }
}
