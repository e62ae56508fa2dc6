//! Shared-memory wavefront model for the extract stores and ldmatrix loads.
//!
//! Banks are 4 bytes wide, so two adjacent binary16 elements `(x, 2w)` and
//! `(x, 2w + 1)` share one word. A request costs as many wavefronts as the
//! largest number of distinct words any single bank must serve.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::config::TileConfig;
use crate::tcsl::{bank_of, TcslEntry, TcslMatrix, GROUP_SIZE, NUM_BANKS};

/// Bytes moved by one shared-memory wavefront (1024 bits).
pub const WAVEFRONT_BYTES: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LdmatrixError {
    #[error("block origin ({x0}, {y0}) is not 8-aligned inside a {m_tb}x{k_tb} tile")]
    Misaligned {
        x0: usize,
        y0: usize,
        m_tb: usize,
        k_tb: usize,
    },
}

/// Wavefronts for one request touching the given `(x, y)` elements.
pub fn request_wavefronts(coords: impl IntoIterator<Item = (usize, usize)>) -> u32 {
    let mut slots: Vec<(u8, usize, usize)> = coords
        .into_iter()
        .map(|(x, y)| (bank_of(x, y).0, x, y / 2))
        .collect();
    slots.sort_unstable();
    slots.dedup();
    let mut per_bank = [0u32; NUM_BANKS];
    for &(bank, _, _) in &slots {
        per_bank[bank as usize] += 1;
    }
    per_bank.into_iter().max().unwrap_or(0)
}

/// Wavefronts needed to store one group of entries (at most 32).
pub fn group_wavefronts(group: &[TcslEntry], cfg: &TileConfig) -> u32 {
    debug_assert!(group.len() <= GROUP_SIZE);
    request_wavefronts(group.iter().map(|e| e.coords(cfg.k_tb)))
}

/// Wavefronts for an ldmatrix read of the 8x8 block at `(x0, y0)`.
pub fn ldmatrix_wavefronts(x0: usize, y0: usize, cfg: &TileConfig) -> Result<u32, LdmatrixError> {
    if !x0.is_multiple_of(8) || !y0.is_multiple_of(8) || x0 + 8 > cfg.m_tb || y0 + 8 > cfg.k_tb {
        return Err(LdmatrixError::Misaligned {
            x0,
            y0,
            m_tb: cfg.m_tb,
            k_tb: cfg.k_tb,
        });
    }
    Ok(request_wavefronts(
        (0..8).flat_map(|i| (0..8).map(move |j| (x0 + i, y0 + j))),
    ))
}

/// Aggregate extract-stage wavefront counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WavefrontStats {
    pub groups: u64,
    pub total_wavefronts: u64,
    pub mean_per_group: f64,
    pub max_per_group: u32,
    /// wavefronts per group -> number of groups
    pub histogram: BTreeMap<u32, u64>,
}

impl WavefrontStats {
    pub fn record(&mut self, wavefronts: u32) {
        self.groups += 1;
        self.total_wavefronts += u64::from(wavefronts);
        self.max_per_group = self.max_per_group.max(wavefronts);
        *self.histogram.entry(wavefronts).or_insert(0) += 1;
        self.mean_per_group = self.total_wavefronts as f64 / self.groups as f64;
    }

    pub fn merge(&mut self, other: &WavefrontStats) {
        self.groups += other.groups;
        self.total_wavefronts += other.total_wavefronts;
        self.max_per_group = self.max_per_group.max(other.max_per_group);
        for (&w, &c) in &other.histogram {
            *self.histogram.entry(w).or_insert(0) += c;
        }
        self.mean_per_group = if self.groups == 0 {
            0.0
        } else {
            self.total_wavefronts as f64 / self.groups as f64
        };
    }

    /// Bytes of shared-memory bandwidth the stores consume.
    pub fn smem_bytes(&self) -> u64 {
        self.total_wavefronts * WAVEFRONT_BYTES as u64
    }
}

/// Stats over the groups of a single tile's entries.
pub fn tile_extract_stats(entries: &[TcslEntry], cfg: &TileConfig) -> WavefrontStats {
    let mut stats = WavefrontStats::default();
    for group in entries.chunks(GROUP_SIZE) {
        stats.record(group_wavefronts(group, cfg));
    }
    stats
}

/// Stats over every group of every tile.
pub fn matrix_extract_stats(t: &TcslMatrix) -> WavefrontStats {
    let cfg = t.tile_config(8);
    let mut stats = WavefrontStats::default();
    for tile in t.tiles() {
        stats.merge(&tile_extract_stats(tile, &cfg));
    }
    stats
}
