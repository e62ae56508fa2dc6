//! Dense binary16 matrices, accumulator-typed outputs and the reference GEMM.
//!
//! The reference GEMM fixes one accumulation order for every output element:
//! k-blocks ascending, and k ascending inside each block, into a single
//! running sum that starts at `+0.0`. Each product is formed from the widened
//! inputs and added with one rounding. The SpMM engine replays this order
//! exactly, which is what makes bit-exact comparison meaningful.

use rayon::prelude::*;

use crate::config::{div_ceil, TileConfig};
use crate::error::MatrixError;
use crate::half::HalfBits;
use crate::scalar::Accumulator;

/// Row-major matrix of binary16 values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<HalfBits>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<HalfBits>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength {
                rows,
                cols,
                actual: data.len(),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![HalfBits::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = HalfBits::ONE;
        }
        m
    }

    /// Rounds each value to binary16.
    pub fn from_f32(rows: usize, cols: usize, values: &[f32]) -> Result<Self, MatrixError> {
        DenseMatrix::new(rows, cols, values.iter().map(|&v| HalfBits::from_f32(v)).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[HalfBits] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [HalfBits] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<HalfBits> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> HalfBits {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: HalfBits) {
        self.data[r * self.cols + c] = v;
    }

    /// Element of the logically zero-padded matrix.
    #[inline]
    pub fn get_padded(&self, r: usize, c: usize) -> HalfBits {
        if r < self.rows && c < self.cols {
            self.data[r * self.cols + c]
        } else {
            HalfBits::ZERO
        }
    }

    pub fn row(&self, r: usize) -> &[HalfBits] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy with every `-0.0` replaced by `+0.0`.
    pub fn normalize_zeros(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.normalize_zero()).collect(),
        }
    }

    pub fn count_zeros(&self) -> usize {
        self.data.iter().filter(|v| v.is_zero()).count()
    }

    /// Fraction of elements numerically equal to zero.
    pub fn sparsity(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.count_zeros() as f64 / self.data.len() as f64
    }

    /// Widen every element into an accumulator matrix.
    pub fn widen<T: Accumulator>(&self) -> OutputMatrix<T> {
        OutputMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&h| T::from_half(h)).collect(),
        }
    }
}

/// Fraction of elements numerically equal to zero.
pub fn sparsity(a: &DenseMatrix) -> f64 {
    a.sparsity()
}

/// Row-major matrix of accumulator values (GEMM and SpMM results).
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Accumulator> OutputMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        OutputMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, MatrixError> {
        if data.len() != rows * cols {
            return Err(MatrixError::DataLength {
                rows,
                cols,
                actual: data.len(),
            });
        }
        Ok(OutputMatrix { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub(crate) fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Shape and every bit pattern identical.
    pub fn bit_eq(&self, other: &OutputMatrix<T>) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits_u64() == b.to_bits_u64())
    }

    /// Index of the first element whose bits differ, if any.
    pub fn first_mismatch(&self, other: &OutputMatrix<T>) -> Option<(usize, usize)> {
        self.data
            .iter()
            .zip(&other.data)
            .position(|(a, b)| a.to_bits_u64() != b.to_bits_u64())
            .map(|i| (i / self.cols, i % self.cols))
    }

    /// Element-wise narrowing after accumulation.
    pub fn to_half(&self) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.to_half()).collect(),
        }
    }
}

fn check_product_dims(a_rows: usize, a_cols: usize, b: &DenseMatrix) -> Result<(), MatrixError> {
    if a_cols != b.rows() {
        return Err(MatrixError::DimensionMismatch {
            lhs_rows: a_rows,
            lhs_cols: a_cols,
            rhs_rows: b.rows(),
            rhs_cols: b.cols(),
        });
    }
    Ok(())
}

pub(crate) fn widen_rhs<T: Accumulator>(b: &DenseMatrix) -> Vec<T> {
    b.data().iter().map(|&h| T::from_half(h)).collect()
}

/// Accumulate one `rows x (k_end - k_start)` slab of A against B into `acc`.
///
/// `a_row(r)` yields the widened A values for row `r` of the slab, indexed
/// from `k_start`. Loop order is row, then k ascending, then n, so each
/// output element sees its k terms in ascending order.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_block<T: Accumulator>(
    acc: &mut [T],
    n: usize,
    a_slab: &[T],
    a_stride: usize,
    rows: usize,
    b_wide: &[T],
    k_start: usize,
    k_end: usize,
) {
    for r in 0..rows {
        let a_row = &a_slab[r * a_stride..r * a_stride + (k_end - k_start)];
        let c_row = &mut acc[r * n..(r + 1) * n];
        for (dk, &a) in a_row.iter().enumerate() {
            let b_row = &b_wide[(k_start + dk) * n..(k_start + dk + 1) * n];
            for (c, &b) in c_row.iter_mut().zip(b_row) {
                *c = *c + a * b;
            }
        }
    }
}

/// Dense reference product `C = A x B` with the documented accumulation
/// order. Row blocks of `cfg.m_tb` rows run in parallel; each block owns its
/// output rows, so the result does not depend on the worker count.
pub fn dense_gemm_ref<T: Accumulator>(
    a: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &TileConfig,
) -> Result<OutputMatrix<T>, MatrixError> {
    cfg.validate()?;
    check_product_dims(a.rows(), a.cols(), b)?;
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = OutputMatrix::<T>::zeros(m, n);
    if m == 0 || n == 0 {
        return Ok(out);
    }
    let b_wide = widen_rhs::<T>(b);
    let k_blocks = div_ceil(k, cfg.k_tb);

    out.data
        .par_chunks_mut(cfg.m_tb * n)
        .enumerate()
        .for_each(|(rb, acc)| {
            let row0 = rb * cfg.m_tb;
            let rows = acc.len() / n;
            let mut slab = vec![T::zero(); rows * cfg.k_tb];
            for kb in 0..k_blocks {
                let k_start = kb * cfg.k_tb;
                let k_end = (k_start + cfg.k_tb).min(k);
                for r in 0..rows {
                    let src = &a.row(row0 + r)[k_start..k_end];
                    for (dst, &h) in slab[r * cfg.k_tb..].iter_mut().zip(src) {
                        *dst = T::from_half(h);
                    }
                }
                accumulate_block(acc, n, &slab, cfg.k_tb, rows, &b_wide, k_start, k_end);
            }
        });
    Ok(out)
}
