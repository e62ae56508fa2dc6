//! Computational intensity, roofline utilisation and footprint estimates.
//!
//! A skinny `M x K` by `K x N` product does `2MNK` FLOP over `2(MK + KN)`
//! bytes of binary16 traffic, giving `CI = MN / (M + N)`. Loading the weight
//! at sparsity `beta` shrinks its traffic by `(1 - beta)`, giving
//! `CI = MN / (M(1 - beta) + N)`. Neither figure counts index overhead or
//! output writes; [`memory_report`] is where the real format overheads show.

use num_traits::Float;
use serde::Serialize;
use thiserror::Error;

use crate::config::{div_ceil, TileConfig};
use crate::pipeline::HardwareParams;
use crate::tcsl::{Footprint, GROUP_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalyzerError {
    #[error("sparsity {0} outside [0, 1)")]
    InvalidSparsity(f64),
    #[error("latency must be positive, got {0}")]
    NonPositiveLatency(f64),
}

#[inline]
fn lift<T: Float>(v: f64) -> T {
    T::from(v).expect("representable")
}

/// Dense computational intensity, FLOP per byte.
pub fn ci_dense<T: Float>(m: u64, n: u64) -> T {
    let (m, n) = (lift::<T>(m as f64), lift::<T>(n as f64));
    m * n / (m + n)
}

/// Computational intensity with the weight loaded at sparsity `beta`.
pub fn ci_sparse<T: Float>(m: u64, n: u64, beta: T) -> Result<T, AnalyzerError> {
    if !(beta >= T::zero() && beta < T::one()) {
        return Err(AnalyzerError::InvalidSparsity(beta.to_f64().unwrap_or(f64::NAN)));
    }
    let (m, n) = (lift::<T>(m as f64), lift::<T>(n as f64));
    Ok(m * n / (m * (T::one() - beta) + n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Memory,
    Compute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflinePoint<T> {
    pub ci: T,
    /// Fraction of peak tensor throughput.
    pub utilization: T,
    pub bound: Bound,
}

/// Attainable fraction of peak: `min(1, ci * bw_gmem / peak_tc)`.
pub fn roofline_utilization<T: Float>(ci: T, hw: &HardwareParams) -> RooflinePoint<T> {
    let ridge = lift::<T>(hw.peak_tc) / lift::<T>(hw.bw_gmem);
    let utilization = (ci / ridge).min(T::one());
    RooflinePoint {
        ci,
        utilization,
        bound: if ci < ridge { Bound::Memory } else { Bound::Compute },
    }
}

/// `2MKN / latency`, in TFLOP/s.
pub fn throughput_tflops<T: Float>(m: u64, k: u64, n: u64, latency_s: T) -> Result<T, AnalyzerError> {
    // also rejects NaN
    if latency_s.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(AnalyzerError::NonPositiveLatency(
            latency_s.to_f64().unwrap_or(f64::NAN),
        ));
    }
    let flop = lift::<T>(2.0) * lift::<T>(m as f64) * lift::<T>(k as f64) * lift::<T>(n as f64);
    Ok(flop / latency_s / lift::<T>(1e12))
}

/// Ratio at or above which the encoded weight is flagged as no smaller than
/// dense.
pub const NO_SAVING_RATIO: f64 = 1.0;
/// Ratio at or above which the encoded weight is flagged as clearly larger.
pub const COUNTERPRODUCTIVE_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryFlag {
    NoSaving,
    FormatCounterproductive,
}

impl MemoryFlag {
    pub fn for_ratio(ratio: f64) -> Option<Self> {
        if ratio >= COUNTERPRODUCTIVE_RATIO {
            Some(MemoryFlag::FormatCounterproductive)
        } else if ratio >= NO_SAVING_RATIO {
            Some(MemoryFlag::NoSaving)
        } else {
            None
        }
    }

    pub fn message(self) -> &'static str {
        match self {
            MemoryFlag::NoSaving => "no saving",
            MemoryFlag::FormatCounterproductive => "format counterproductive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryReport {
    pub dense_bytes: usize,
    pub tcsl_bytes_estimate: usize,
    pub ratio: f64,
    pub flag: Option<MemoryFlag>,
}

/// Expected encoded size of an `m x k` weight at sparsity `beta`: each tile
/// holds `ceil((1 - beta) * tile_elems)` entries rounded up to a whole
/// group, plus the offsets array and header.
pub fn memory_report(m: usize, k: usize, beta: f64, cfg: &TileConfig) -> MemoryReport {
    let tiles = div_ceil(m, cfg.m_tb) * div_ceil(k, cfg.k_tb);
    let per_tile = ((1.0 - beta.clamp(0.0, 1.0)) * cfg.tile_elems() as f64).ceil() as usize;
    let padded = div_ceil(per_tile, GROUP_SIZE) * GROUP_SIZE;
    let f = Footprint::new(padded * tiles, tiles, m, k);
    MemoryReport {
        dense_bytes: f.dense_bytes,
        tcsl_bytes_estimate: f.total_bytes,
        ratio: f.ratio,
        flag: MemoryFlag::for_ratio(f.ratio),
    }
}

/// One row of the analysis report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(rename = "K")]
    pub k: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub beta: f64,
    pub ci_dense: f64,
    pub ci_sparse: f64,
    pub util_dense: f64,
    pub util_sparse: f64,
    pub dense_bytes: usize,
    pub tcsl_bytes: usize,
    pub ratio: f64,
}

/// Analytical report for one product. `tcsl_bytes` overrides the estimate
/// with a measured encoded size when one is available.
pub fn report_row(
    m: u64,
    k: u64,
    n: u64,
    beta: f64,
    hw: &HardwareParams,
    cfg: &TileConfig,
    tcsl_bytes: Option<usize>,
) -> Result<ReportRow, AnalyzerError> {
    let ci_d = ci_dense::<f64>(m, n);
    let ci_s = ci_sparse::<f64>(m, n, beta)?;
    let mem = memory_report(m as usize, k as usize, beta, cfg);
    let tcsl = tcsl_bytes.unwrap_or(mem.tcsl_bytes_estimate);
    Ok(ReportRow {
        m,
        k,
        n,
        beta,
        ci_dense: ci_d,
        ci_sparse: ci_s,
        util_dense: roofline_utilization(ci_d, hw).utilization,
        util_sparse: roofline_utilization(ci_s, hw).utilization,
        dense_bytes: mem.dense_bytes,
        tcsl_bytes: tcsl,
        ratio: tcsl as f64 / mem.dense_bytes as f64,
    })
}

/// A named weight-by-activation product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatmulShape {
    pub name: String,
    pub m: usize,
    pub k: usize,
}

/// The four decoder-layer products (QKV projection, output projection,
/// MLP up and down) for hidden sizes 7168, 9216 and 12288.
pub fn decoder_shapes() -> Vec<MatmulShape> {
    let models = [("opt-30b", 7168), ("opt-66b", 9216), ("opt-175b", 12288)];
    let mut out = Vec::new();
    for (model, h) in models {
        for (layer, m, k) in [
            ("qkv", 3 * h, h),
            ("out_proj", h, h),
            ("mlp1", 4 * h, h),
            ("mlp2", h, 4 * h),
        ] {
            out.push(MatmulShape {
                name: format!("{model}/{layer}"),
                m,
                k,
            });
        }
    }
    out
}

pub const BENCH_BATCH_SIZES: [usize; 4] = [8, 16, 32, 64];
pub const BENCH_SPARSITIES: [f64; 3] = [0.7, 0.8, 0.9];
