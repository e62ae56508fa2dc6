//! Stage timeline of the double-buffered SpMM main loop.
//!
//! Loop iteration `i` loads weight/activation tile `i` into buffer `i % 2`
//! (`rst_smem`, `gmem2reg`, `ld_dense`, `extract`) while the tensor cores
//! consume tile `i - 1` from the other buffer (`smem2tc`). Iteration 0 is
//! the prologue and the last tile is consumed after the loop. Events carry
//! the index of the tile they touch, so `buffer == iter % 2` throughout.
//!
//! Ordering rules, each an edge in the happens-before graph:
//!
//! * R1: `extract(i)` after `rst_smem(i)` (through `barrier_async1(i)`) and
//!   after `gmem2reg(i)`.
//! * R2: `smem2tc(i)` after `barrier_iter(i)`.
//! * R3: `barrier_iter(i)` after `extract(i)`, `ld_dense(i)` and
//!   `smem2tc(i - 1)`.
//! * R4: `rst_smem(i)`, `gmem2reg(i)` and `ld_dense(i)` after
//!   `barrier_iter(i - 1)`.
//!
//! The edge set is minimal: every edge is the only path realising its rule.

use std::fmt;

use petgraph::algo::{has_path_connecting, is_cyclic_directed};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::config::{div_ceil, TileConfig};
use crate::extract::{tile_extract_stats, WAVEFRONT_BYTES};
use crate::sparsify::gen_random_sparse;
use crate::tcsl::{encode_tile, TcslMatrix};

/// Seed of the representative tile sampled when only a sparsity is known.
pub const SAMPLE_TILE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    RstSmem,
    Gmem2reg,
    LdDense,
    Extract,
    Smem2tc,
    BarrierAsync1,
    BarrierIter,
}

impl StageKind {
    pub fn name(self) -> &'static str {
        match self {
            StageKind::RstSmem => "rst_smem",
            StageKind::Gmem2reg => "gmem2reg",
            StageKind::LdDense => "ld_dense",
            StageKind::Extract => "extract",
            StageKind::Smem2tc => "smem2tc",
            StageKind::BarrierAsync1 => "barrier_async1",
            StageKind::BarrierIter => "barrier_iter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Resource {
    Gmem,
    Smem,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageEvent {
    pub kind: StageKind,
    pub iter: usize,
    pub buffer: u8,
    pub resource: Resource,
    /// Bytes for memory stages, FLOP for `smem2tc`.
    pub cost: f64,
    /// Shared-memory reads issued alongside the tensor-core work.
    #[serde(skip_serializing_if = "is_zero")]
    pub smem_read_bytes: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl StageEvent {
    fn new(kind: StageKind, iter: usize, resource: Resource, cost: f64) -> Self {
        StageEvent {
            kind,
            iter,
            buffer: (iter % 2) as u8,
            resource,
            cost,
            smem_read_bytes: 0.0,
        }
    }
}

impl fmt::Display for StageEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.name(), self.iter)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventTimeline {
    pub iterations: usize,
    pub events: Vec<StageEvent>,
    /// `(before, after)` index pairs into `events`.
    pub edges: Vec<(usize, usize)>,
}

impl EventTimeline {
    pub fn find(&self, kind: StageKind, iter: usize) -> Option<usize> {
        self.events
            .iter()
            .position(|e| e.kind == kind && e.iter == iter)
    }

    /// Remove the edge `before -> after`; returns whether it existed.
    pub fn remove_edge(&mut self, before: usize, after: usize) -> bool {
        let len = self.edges.len();
        self.edges.retain(|&e| e != (before, after));
        self.edges.len() != len
    }

    pub fn add_edge(&mut self, before: usize, after: usize) {
        self.edges.push((before, after));
    }

    fn graph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::with_capacity(self.events.len(), self.edges.len());
        for _ in &self.events {
            g.add_node(());
        }
        for &(a, b) in &self.edges {
            if a < self.events.len() && b < self.events.len() {
                g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
            }
        }
        g
    }
}

/// Aggregate per-iteration load of the weight stream.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct IterationLoad {
    entries: u64,
    wavefronts: u64,
}

struct Grid {
    row_blocks: usize,
    n_blocks: usize,
    loads: Vec<IterationLoad>,
}

/// Timeline for an `M x K` weight at sparsity `beta` times a `K x N`
/// activation. Every weight tile is modelled by one seeded sample tile,
/// encoded with bank reordering.
pub fn build_schedule(m: usize, k: usize, n: usize, beta: f64, cfg: &TileConfig) -> EventTimeline {
    let sample = gen_random_sparse(cfg.m_tb, cfg.k_tb, beta.clamp(0.0, 1.0), SAMPLE_TILE_SEED)
        .expect("sample tile");
    let tile = encode_tile(&sample, 0, 0, cfg, true);
    let stats = tile_extract_stats(&tile, cfg);
    let row_blocks = div_ceil(m, cfg.m_tb);
    let per_iter = IterationLoad {
        entries: (tile.len() * row_blocks) as u64,
        wavefronts: stats.total_wavefronts * row_blocks as u64,
    };
    timeline(
        cfg,
        Grid {
            row_blocks,
            n_blocks: div_ceil(n, cfg.n_tb),
            loads: vec![per_iter; div_ceil(k, cfg.k_tb)],
        },
    )
}

/// Timeline driven by the entry counts and measured wavefronts of an
/// encoded matrix.
pub fn build_schedule_for_matrix(t: &TcslMatrix, n: usize, cfg: &TileConfig) -> EventTimeline {
    let tile_cfg = t.tile_config(n);
    let mut loads = vec![IterationLoad::default(); t.tile_cols()];
    for ti in 0..t.tile_rows() {
        for (tj, load) in loads.iter_mut().enumerate() {
            let entries = t.tile_entries(t.tile_index(ti, tj));
            load.entries += entries.len() as u64;
            load.wavefronts += tile_extract_stats(entries, &tile_cfg).total_wavefronts;
        }
    }
    let cfg = TileConfig {
        m_tb: t.m_tb(),
        k_tb: t.k_tb(),
        ..*cfg
    };
    timeline(
        &cfg,
        Grid {
            row_blocks: t.tile_rows(),
            n_blocks: div_ceil(n, cfg.n_tb),
            loads,
        },
    )
}

fn timeline(cfg: &TileConfig, grid: Grid) -> EventTimeline {
    let (m_tb, k_tb, n_tb) = (cfg.m_tb as f64, cfg.k_tb as f64, cfg.n_tb as f64);
    let blocks = (grid.row_blocks * grid.n_blocks) as f64;
    let nb = grid.n_blocks as f64;
    let iterations = grid.loads.len();

    let mut events = Vec::with_capacity(7 * iterations + 1);
    let mut edges = Vec::new();
    let mut push = |ev: StageEvent| {
        events.push(ev);
        events.len() - 1
    };
    let smem2tc = |t: usize| {
        let mut ev = StageEvent::new(StageKind::Smem2tc, t, Resource::Tc, 2.0 * m_tb * n_tb * k_tb * blocks);
        ev.smem_read_bytes = 2.0 * (m_tb * k_tb + k_tb * n_tb) * blocks;
        ev
    };

    let mut prev_barrier: Option<usize> = None;
    for (i, load) in grid.loads.iter().enumerate() {
        // each thread block reads its own tile offset; the array's final
        // sentinel is read once per column of blocks
        let offsets = 4.0 * grid.row_blocks as f64 + if i == 0 { 4.0 } else { 0.0 };
        let rst = push(StageEvent::new(StageKind::RstSmem, i, Resource::Smem, 2.0 * m_tb * k_tb * blocks));
        let g2r = push(StageEvent::new(
            StageKind::Gmem2reg,
            i,
            Resource::Gmem,
            nb * (4.0 * load.entries as f64 + offsets),
        ));
        let ld = push(StageEvent::new(StageKind::LdDense, i, Resource::Gmem, 2.0 * k_tb * n_tb * blocks));
        let compute = (i > 0).then(|| push(smem2tc(i - 1)));
        let wait1 = push(StageEvent::new(StageKind::BarrierAsync1, i, Resource::None, 0.0));
        let ext = push(StageEvent::new(
            StageKind::Extract,
            i,
            Resource::Smem,
            nb * (load.wavefronts * WAVEFRONT_BYTES as u64) as f64,
        ));
        let bar = push(StageEvent::new(StageKind::BarrierIter, i, Resource::None, 0.0));

        edges.extend([(rst, wait1), (wait1, ext), (g2r, ext)]);
        edges.extend([(ext, bar), (ld, bar)]);
        if let Some(c) = compute {
            edges.push((c, bar));
            edges.push((prev_barrier.expect("barrier of previous iteration"), c));
        }
        if let Some(pb) = prev_barrier {
            edges.extend([(pb, rst), (pb, g2r), (pb, ld)]);
        }
        prev_barrier = Some(bar);
    }
    if let Some(pb) = prev_barrier {
        let c = push(smem2tc(iterations - 1));
        edges.push((pb, c));
    }
    EventTimeline {
        iterations,
        events,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    Buffer,
    Acyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub iteration: Option<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rule, self.iteration) {
            (Rule::Acyclic, _) => write!(f, "acyclic violated: {}", self.detail),
            (rule, Some(i)) => write!(f, "{rule:?} @ iter {i}: {}", self.detail),
            (rule, None) => write!(f, "{rule:?}: {}", self.detail),
        }
    }
}

/// Check the ordering rules and acyclicity. Ordering is happens-before,
/// i.e. reachability in the edge graph.
pub fn validate_schedule(t: &EventTimeline) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = t.graph();
    if is_cyclic_directed(&g) {
        out.push(Violation {
            rule: Rule::Acyclic,
            iteration: None,
            detail: "happens-before graph has a cycle".into(),
        });
    }
    if let Some(&(a, b)) = t
        .edges
        .iter()
        .find(|&&(a, b)| a >= t.events.len() || b >= t.events.len())
    {
        out.push(Violation {
            rule: Rule::Acyclic,
            iteration: None,
            detail: format!("edge ({a}, {b}) references a missing event"),
        });
    }
    for ev in &t.events {
        if ev.buffer as usize != ev.iter % 2 {
            out.push(Violation {
                rule: Rule::Buffer,
                iteration: Some(ev.iter),
                detail: format!("{ev} uses buffer {}", ev.buffer),
            });
        }
    }

    let mut require = |rule: Rule, i: usize, before: (StageKind, usize), after: (StageKind, usize)| {
        let name = |(k, it): (StageKind, usize)| format!("{}({it})", k.name());
        match (t.find(before.0, before.1), t.find(after.0, after.1)) {
            (Some(a), Some(b)) => {
                if !has_path_connecting(&g, NodeIndex::new(a), NodeIndex::new(b), None) {
                    out.push(Violation {
                        rule,
                        iteration: Some(i),
                        detail: format!("{} not ordered after {}", name(after), name(before)),
                    });
                }
            }
            (a, _) => {
                let missing = if a.is_none() { before } else { after };
                out.push(Violation {
                    rule,
                    iteration: Some(i),
                    detail: format!("missing event {}", name(missing)),
                });
            }
        }
    };

    use StageKind::*;
    for i in 0..t.iterations {
        require(Rule::R1, i, (RstSmem, i), (Extract, i));
        require(Rule::R1, i, (Gmem2reg, i), (Extract, i));
        require(Rule::R2, i, (BarrierIter, i), (Smem2tc, i));
        require(Rule::R3, i, (Extract, i), (BarrierIter, i));
        require(Rule::R3, i, (LdDense, i), (BarrierIter, i));
        if i > 0 {
            require(Rule::R3, i, (Smem2tc, i - 1), (BarrierIter, i));
            require(Rule::R4, i, (BarrierIter, i - 1), (RstSmem, i));
            require(Rule::R4, i, (BarrierIter, i - 1), (Gmem2reg, i));
            require(Rule::R4, i, (BarrierIter, i - 1), (LdDense, i));
        }
    }
    out
}

/// Peak tensor throughput and stream bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareParams {
    /// FLOP/s
    pub peak_tc: f64,
    /// bytes/s
    pub bw_gmem: f64,
    /// bytes/s
    pub bw_smem: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            peak_tc: 312e12,
            bw_gmem: 2.0e12,
            bw_smem: 19.49e12,
        }
    }
}

impl HardwareParams {
    pub fn is_valid(&self) -> bool {
        [self.peak_tc, self.bw_gmem, self.bw_smem]
            .iter()
            .all(|&v| v > 0.0 && !v.is_nan())
    }

    /// FLOP/byte where compute and global-memory roofs meet.
    pub fn ridge(&self) -> f64 {
        self.peak_tc / self.bw_gmem
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HardwareParams {
            peak_tc: self.peak_tc * factor,
            bw_gmem: self.bw_gmem * factor,
            bw_smem: self.bw_smem * factor,
        }
    }
}

/// Raw resource demand of a timeline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StreamTotals {
    pub gmem_bytes: f64,
    pub smem_bytes: f64,
    pub tc_flop: f64,
}

impl StreamTotals {
    fn add(&mut self, ev: &StageEvent) {
        match ev.resource {
            Resource::Gmem => self.gmem_bytes += ev.cost,
            Resource::Smem => self.smem_bytes += ev.cost,
            Resource::Tc => self.tc_flop += ev.cost,
            Resource::None => {}
        }
        self.smem_bytes += ev.smem_read_bytes;
    }
}

pub fn stream_totals(t: &EventTimeline) -> StreamTotals {
    let mut s = StreamTotals::default();
    t.events.iter().for_each(|ev| s.add(ev));
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTime {
    pub iter: usize,
    pub gmem_s: f64,
    pub smem_s: f64,
    pub tc_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeEstimate {
    pub gmem_s: f64,
    pub smem_s: f64,
    pub tc_s: f64,
    /// Slowest stream: `max(gmem_s, smem_s, tc_s)`.
    pub kernel_s: f64,
    pub binding: Resource,
    pub per_iteration: Vec<IterationTime>,
}

fn times(s: &StreamTotals, hw: &HardwareParams) -> (f64, f64, f64) {
    (s.gmem_bytes / hw.bw_gmem, s.smem_bytes / hw.bw_smem, s.tc_flop / hw.peak_tc)
}

/// Stream-sum time model: each resource works through its total demand at
/// full rate and the kernel takes as long as the slowest one.
pub fn estimate_time(t: &EventTimeline, hw: &HardwareParams) -> TimeEstimate {
    let (gmem_s, smem_s, tc_s) = times(&stream_totals(t), hw);
    let mut per = vec![StreamTotals::default(); t.iterations];
    for ev in &t.events {
        if let Some(slot) = per.get_mut(ev.iter) {
            slot.add(ev);
        }
    }
    let per_iteration = per
        .iter()
        .enumerate()
        .map(|(iter, s)| {
            let (g, sm, tc) = times(s, hw);
            IterationTime {
                iter,
                gmem_s: g,
                smem_s: sm,
                tc_s: tc,
            }
        })
        .collect();
    let (kernel_s, binding) = [
        (gmem_s, Resource::Gmem),
        (smem_s, Resource::Smem),
        (tc_s, Resource::Tc),
    ]
    .into_iter()
    .fold((f64::NEG_INFINITY, Resource::None), |best, cur| {
        if cur.0 > best.0 {
            cur
        } else {
            best
        }
    });
    TimeEstimate {
        gmem_s,
        smem_s,
        tc_s,
        kernel_s,
        binding,
        per_iteration,
    }
}
