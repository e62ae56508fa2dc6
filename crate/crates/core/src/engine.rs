//! Load-as-sparse, compute-as-dense SpMM.
//!
//! Each weight tile is rebuilt densely in a zeroed buffer from its Tiled-CSL
//! entries, then multiplied in full, zeros included. Row blocks run in
//! parallel and the k-blocks of a row block run in order, replaying the
//! accumulation order of [`dense_gemm_ref`](crate::matrix::dense_gemm_ref).

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{div_ceil, TileConfig};
use crate::error::{MatrixError, SpmmError, TcslError};
use crate::half::HalfBits;
use crate::matrix::{accumulate_block, widen_rhs, DenseMatrix, OutputMatrix};
use crate::scalar::Accumulator;
use crate::tcsl::{TcslEntry, TcslMatrix};

/// Upper bound on entries a thread can hold in its unrolled register loop.
pub const MAX_REGS_PER_THREAD: usize = 64;

/// Dense image of one weight tile, as it would sit in shared memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileBuffer {
    m_tb: usize,
    k_tb: usize,
    data: Vec<HalfBits>,
}

impl TileBuffer {
    pub fn zeroed(m_tb: usize, k_tb: usize) -> Self {
        TileBuffer {
            m_tb,
            k_tb,
            data: vec![HalfBits::ZERO; m_tb * k_tb],
        }
    }

    /// Reset to `+0.0`.
    pub fn reset(&mut self) {
        self.data.fill(HalfBits::ZERO);
    }

    /// Write entries in order. Locations are checked before any write.
    pub fn extract(&mut self, entries: &[TcslEntry]) -> Result<(), TcslError> {
        let cap = self.data.len();
        if let Some((index, e)) = entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.location() as usize >= cap)
        {
            return Err(TcslError::LocationOutOfRange {
                index,
                location: e.location(),
                capacity: cap,
            });
        }
        for e in entries {
            self.data[e.location() as usize] = e.value().normalize_zero();
        }
        Ok(())
    }

    pub fn get(&self, x: usize, y: usize) -> HalfBits {
        self.data[x * self.k_tb + y]
    }

    pub fn data(&self) -> &[HalfBits] {
        &self.data
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.m_tb, self.k_tb, self.data.clone()).expect("buffer shape")
    }
}

/// Zero-initialised buffer with every entry's value written at its location.
pub fn extract_tile(entries: &[TcslEntry], cfg: &TileConfig) -> Result<TileBuffer, TcslError> {
    let mut buf = TileBuffer::zeroed(cfg.m_tb, cfg.k_tb);
    buf.extract(entries)?;
    Ok(buf)
}

/// `C = A x B` with `A` in Tiled-CSL form. Bit-identical to
/// `dense_gemm_ref(decode(a), b, cfg)`.
pub fn spmm<T: Accumulator>(
    a: &TcslMatrix,
    b: &DenseMatrix,
    cfg: &TileConfig,
) -> Result<OutputMatrix<T>, SpmmError> {
    cfg.validate()?;
    if cfg.m_tb != a.m_tb() || cfg.k_tb != a.k_tb() {
        return Err(SpmmError::TileMismatch {
            found_m: a.m_tb(),
            found_k: a.k_tb(),
            cfg_m: cfg.m_tb,
            cfg_k: cfg.k_tb,
        });
    }
    if a.k() != b.rows() {
        return Err(MatrixError::DimensionMismatch {
            lhs_rows: a.m(),
            lhs_cols: a.k(),
            rhs_rows: b.rows(),
            rhs_cols: b.cols(),
        }
        .into());
    }
    a.validate()?;

    let (m, k, n) = (a.m(), a.k(), b.cols());
    let mut out = OutputMatrix::<T>::zeros(m, n);
    if m == 0 || n == 0 {
        return Ok(out);
    }
    let b_wide = widen_rhs::<T>(b);
    let (m_tb, k_tb) = (cfg.m_tb, cfg.k_tb);
    let k_blocks = div_ceil(k, k_tb);

    out.data_mut()
        .par_chunks_mut(m_tb * n)
        .enumerate()
        .try_for_each(|(rb, acc)| -> Result<(), TcslError> {
            let rows = acc.len() / n;
            let mut buf = TileBuffer::zeroed(m_tb, k_tb);
            let mut slab = vec![T::zero(); m_tb * k_tb];
            for kb in 0..k_blocks {
                buf.reset();
                buf.extract(a.tile_entries(a.tile_index(rb, kb)))?;
                for (dst, &h) in slab.iter_mut().zip(buf.data()) {
                    *dst = T::from_half(h);
                }
                let k_start = kb * k_tb;
                let k_end = (k_start + k_tb).min(k);
                accumulate_block(acc, n, &slab, k_tb, rows, &b_wide, k_start, k_end);
            }
            Ok(())
        })?;
    Ok(out)
}

/// Per-thread register demand of the extract loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegPressure {
    /// `max over tiles of ceil(entries / threads_per_block)`
    pub max_entries_per_thread: usize,
    /// Exceeds [`MAX_REGS_PER_THREAD`].
    pub over_limit: bool,
}

pub fn reg_pressure(t: &TcslMatrix, cfg: &TileConfig) -> RegPressure {
    let max_entries_per_thread = t
        .tiles()
        .map(|tile| div_ceil(tile.len(), cfg.threads_per_block))
        .max()
        .unwrap_or(0);
    RegPressure {
        max_entries_per_thread,
        over_limit: max_entries_per_thread > MAX_REGS_PER_THREAD,
    }
}
