use rayon::prelude::*;

use super::{bank_of, TcslEntry, TcslMatrix, GROUP_SIZE, NUM_BANKS};
use crate::config::{div_ceil, TileConfig};
use crate::error::{MatrixError, TcslError};
use crate::matrix::DenseMatrix;

/// Encode one tile at grid cell `(ti, tj)`.
///
/// With `reorder`, nonzeros are bucketed by bank and emitted by repeatedly
/// taking the head of the fullest remaining bucket (lowest bank id on ties);
/// each bucket yields in row-major discovery order. Without it, nonzeros
/// come out in row-major order. The tail is padded to a multiple of 32 with
/// zero-valued entries at the tile's first zero positions.
pub fn encode_tile(
    a: &DenseMatrix,
    ti: usize,
    tj: usize,
    cfg: &TileConfig,
    reorder: bool,
) -> Vec<TcslEntry> {
    let (m_tb, k_tb) = (cfg.m_tb, cfg.k_tb);
    let (row0, col0) = (ti * m_tb, tj * k_tb);

    let mut nonzeros = Vec::new();
    let mut buckets: Vec<Vec<TcslEntry>> = if reorder {
        vec![Vec::new(); NUM_BANKS]
    } else {
        Vec::new()
    };
    for x in 0..m_tb {
        for y in 0..k_tb {
            let v = a.get_padded(row0 + x, col0 + y);
            if v.is_zero() {
                continue;
            }
            let e = TcslEntry::new(v, (x * k_tb + y) as u16);
            if reorder {
                buckets[bank_of(x, y).0 as usize].push(e);
            } else {
                nonzeros.push(e);
            }
        }
    }

    if reorder {
        let total: usize = buckets.iter().map(Vec::len).sum();
        nonzeros.reserve(total);
        let mut heads = [0usize; NUM_BANKS];
        for _ in 0..total {
            let mut best = 0;
            let mut best_left = 0;
            for (b, bucket) in buckets.iter().enumerate() {
                let left = bucket.len() - heads[b];
                if left > best_left {
                    best = b;
                    best_left = left;
                }
            }
            nonzeros.push(buckets[best][heads[best]]);
            heads[best] += 1;
        }
    }

    let short = (GROUP_SIZE - nonzeros.len() % GROUP_SIZE) % GROUP_SIZE;
    if short > 0 {
        let pads = (0..m_tb * k_tb)
            .filter(|&loc| a.get_padded(row0 + loc / k_tb, col0 + loc % k_tb).is_zero())
            .take(short)
            .map(|loc| TcslEntry::pad(loc as u16));
        nonzeros.extend(pads);
        debug_assert_eq!(nonzeros.len() % GROUP_SIZE, 0);
    }
    nonzeros
}

/// Encode a dense matrix; shapes that are not tile multiples are zero-padded.
pub fn encode(a: &DenseMatrix, cfg: &TileConfig, reorder: bool) -> Result<TcslMatrix, MatrixError> {
    cfg.validate()?;
    let tile_rows = div_ceil(a.rows(), cfg.m_tb);
    let tile_cols = div_ceil(a.cols(), cfg.k_tb);
    let tiles: Vec<Vec<TcslEntry>> = (0..tile_rows * tile_cols)
        .into_par_iter()
        .map(|t| encode_tile(a, t / tile_cols, t % tile_cols, cfg, reorder))
        .collect();

    let total: usize = tiles.iter().map(Vec::len).sum();
    let mut offsets = Vec::with_capacity(tiles.len() + 1);
    let mut entries = Vec::with_capacity(total);
    offsets.push(0u32);
    for tile in tiles {
        entries.extend_from_slice(&tile);
        offsets.push(entries.len() as u32);
    }
    Ok(TcslMatrix::from_parts_unchecked(
        a.rows(),
        a.cols(),
        cfg.m_tb,
        cfg.k_tb,
        offsets,
        entries,
        reorder,
    ))
}

/// Rebuild the dense matrix: every tile starts at `+0.0` and each entry's
/// value lands at its location. The result is cropped to `m x k`.
pub fn decode(t: &TcslMatrix) -> Result<DenseMatrix, TcslError> {
    t.validate()?;
    let (m, k, m_tb, k_tb) = (t.m(), t.k(), t.m_tb(), t.k_tb());
    let mut out = DenseMatrix::zeros(m, k);
    for ti in 0..t.tile_rows() {
        for tj in 0..t.tile_cols() {
            for e in t.tile_entries(t.tile_index(ti, tj)) {
                let (x, y) = e.coords(k_tb);
                let (r, c) = (ti * m_tb + x, tj * k_tb + y);
                if r < m && c < k {
                    out.set(r, c, e.value().normalize_zero());
                }
            }
        }
    }
    Ok(out)
}
