use std::fmt;

use serde::Serialize;

use super::config::SimConfig;
use super::davc::DavcState;
use crate::dataflow::{aggregate_cycles, consumption_times, hash_edges, reorganize, RingSchedule, SourceBatch};
use crate::error::{EngnError, Result};
use crate::graph::{partition_edges, Edge, Graph, TileGrid, VertexId};
use crate::matrix::PropertyMatrix;
use crate::model::{forward_layer, layer_edges, validate_order, LayerSpec, ModelKind};
use crate::scalar::Scalar;
use crate::schedule::{dasr_decide, io_cost, tile_order, StageOrder, TileOrder};

/// Stage order plus tile visiting order for one layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub order: StageOrder,
    pub tile_order: TileOrder,
}

impl Plan {
    /// DASR for the stage order and the I/O model for the tile order, always
    /// S-shaped.
    pub fn auto(layer: &LayerSpec, q: usize) -> Result<Self> {
        let order = dasr_decide(layer.f(), layer.h(), layer.aggregator(), layer.kind());
        let major = io_cost(q as u64, layer.f() as u64, layer.h() as u64)?.chosen;
        Ok(Plan {
            order,
            tile_order: tile_order(q, major, true),
        })
    }

    pub fn validate(&self, layer: &LayerSpec, q: usize) -> Result<()> {
        validate_order(layer, self.order)?;
        let mut tiles = self.tile_order.tiles.clone();
        tiles.sort_unstable();
        tiles.dedup();
        if tiles.len() != q * q || self.tile_order.tiles.len() != q * q || tiles.iter().any(|&(i, j)| i >= q || j >= q) {
            return Err(EngnError::InvalidArgument(format!(
                "tile order is not a permutation of the {q}x{q} grid"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TraceKind {
    FeatureReady,
    AggregateDone,
    UpdateDone,
}

/// A per-vertex milestone on the compute timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TraceEvent {
    pub cycle: u64,
    pub kind: TraceKind,
    pub vertex: VertexId,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            TraceKind::FeatureReady => 'P',
            TraceKind::AggregateDone => 'A',
            TraceKind::UpdateDone => 'O',
        };
        write!(f, "{} {} {}", self.cycle, tag, self.vertex)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SimStats {
    pub cycles_feature: u64,
    pub cycles_aggregate: u64,
    pub cycles_update: u64,
    /// End of the compute timeline, before stalls and fill.
    pub cycles_compute: u64,
    pub cycles_stall: u64,
    pub cycles_fill: u64,
    pub cycles_total: u64,
    pub dram_read_bytes: u64,
    pub dram_write_bytes: u64,
    pub vertex_read_words: u64,
    pub vertex_write_words: u64,
    pub edge_read_bytes: u64,
    pub davc_hits: u64,
    pub davc_misses: u64,
    pub pe_busy_cycles: u64,
    pub feature_macs: u64,
    pub feature_utilization: f64,
    pub utilization: f64,
    pub analytic_read_words: u64,
    pub analytic_write_words: u64,
}

impl SimStats {
    pub fn davc_hit_rate(&self) -> f64 {
        let total = self.davc_hits + self.davc_misses;
        if total == 0 {
            0.0
        } else {
            self.davc_hits as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput<S> {
    pub output: PropertyMatrix<S>,
    pub stats: SimStats,
    pub trace: Vec<TraceEvent>,
}

/// Matrix products each stage issues, as (input dim, output dim) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageCosts {
    /// Per source vertex, before aggregation.
    pub pre: Vec<(usize, usize)>,
    /// Width of the vectors reduced over edges.
    pub agg_dim: usize,
    /// Per destination vertex, in the update stage.
    pub post: Vec<(usize, usize)>,
}

pub fn stage_costs(layer: &LayerSpec, order: StageOrder) -> StageCosts {
    let (f, h) = (layer.f(), layer.h());
    match layer.kind() {
        ModelKind::Gcn => match order {
            StageOrder::Fau => StageCosts {
                pre: vec![(f, h)],
                agg_dim: h,
                post: vec![],
            },
            StageOrder::Afu => StageCosts {
                pre: vec![],
                agg_dim: f,
                post: vec![(f, h)],
            },
        },
        ModelKind::GsPool => {
            let p = layer.weights().pool_dim().unwrap_or(h);
            StageCosts {
                pre: vec![(f, p)],
                agg_dim: p,
                post: vec![(p + f, h)],
            }
        }
        ModelKind::Rgcn => StageCosts {
            pre: vec![],
            agg_dim: f,
            post: vec![(f, h); layer.num_relations() + 1],
        },
        ModelKind::GatedGcn => StageCosts {
            pre: vec![(f, f), (f, f)],
            agg_dim: f,
            post: vec![(f, h)],
        },
        ModelKind::Grn => {
            let mut post = vec![(f, h)];
            if f != h {
                post.push((f, h));
            }
            post.extend(std::iter::repeat_n((h, h), 6));
            StageCosts {
                pre: vec![],
                agg_dim: f,
                post,
            }
        }
    }
}

fn matmul_cycles(pairs: &[(usize, usize)], c: usize) -> u64 {
    pairs.iter().map(|&(i, o)| (i * o.div_ceil(c)) as u64).sum()
}

fn macs(pairs: &[(usize, usize)]) -> u64 {
    pairs.iter().map(|&(i, o)| (i * o) as u64).sum()
}

/// Smallest q whose largest interval of `h`-wide results fits the result
/// banks.
pub fn default_q(n: usize, h: usize, cfg: &SimConfig) -> Result<usize> {
    let per_vertex = (h * cfg.element_bytes).max(1);
    let fits = cfg.result_bank_bytes / per_vertex;
    if fits == 0 {
        return Err(EngnError::Capacity(format!(
            "a single {h}-wide result does not fit {} result-bank bytes",
            cfg.result_bank_bytes
        )));
    }
    Ok(n.div_ceil(fits).clamp(1, n.max(1)))
}

struct Transfers {
    bw: u64,
    latency: u64,
}

impl Transfers {
    fn cycles(&self, bytes: u64) -> u64 {
        if bytes == 0 {
            0
        } else {
            bytes.div_ceil(self.bw) + self.latency
        }
    }
}

/// Cycle-level run of one layer. The returned values always equal
/// `forward_layer` under the plan's stage order.
pub fn simulate_layer<S: Scalar>(
    g: &Graph,
    tiles: &TileGrid,
    layer: &LayerSpec,
    props: &PropertyMatrix<S>,
    plan: &Plan,
    cfg: &SimConfig,
) -> Result<SimOutput<S>> {
    cfg.validate()?;
    let n = g.num_vertices();
    let q = tiles.q();
    if tiles.num_vertices() != n {
        return Err(EngnError::DimensionMismatch(format!(
            "tile grid covers {} vertices, graph has {n}",
            tiles.num_vertices()
        )));
    }
    plan.validate(layer, q)?;
    let (f, h) = (layer.f(), layer.h());
    let eb = cfg.element_bytes as u64;
    let needed = (tiles.max_interval_len() * h * cfg.element_bytes) as u64;
    if needed > cfg.result_bank_bytes as u64 {
        return Err(EngnError::Capacity(format!(
            "interval of {} vertices needs {needed} result-bank bytes, only {} available",
            tiles.max_interval_len(),
            cfg.result_bank_bytes
        )));
    }

    let output = forward_layer(layer, props, g, plan.order)?;

    let le = layer_edges(layer, g)?;
    let grid = partition_edges(n, &le.edges, q)?;
    let intervals = tiles.intervals();
    let costs = stage_costs(layer, plan.order);
    let (r, c) = (cfg.rows, cfg.cols);
    let ring = RingSchedule::new(r)?;
    let pre_cycles = matmul_cycles(&costs.pre, c);
    let pre_macs = macs(&costs.pre);
    let post_cycles = matmul_cycles(&costs.post, c) + h.div_ceil(c) as u64;
    let post_macs = macs(&costs.post);
    let agg_passes = costs.agg_dim.div_ceil(c).max(1) as u64;

    let mut davc = cfg.davc_enabled.then(|| {
        DavcState::new(
            g.in_degree(),
            cfg.davc_lines(costs.agg_dim),
            cfg.davc_static_lines(costs.agg_dim),
        )
    });

    let order = &plan.tile_order.tiles;
    let mut last_visit = vec![0usize; q];
    for (k, &(_, j)) in order.iter().enumerate() {
        last_visit[j] = k;
    }

    let mut stats = SimStats::default();
    let mut trace = Vec::new();
    let mut last_contrib: Vec<Option<u64>> = if cfg.trace { vec![None; n] } else { Vec::new() };

    let (mut fe_free, mut agg_free, mut upd_free) = (0u64, 0u64, 0u64);
    let mut agg_history = [0u64; 2];
    let mut resident_src: Option<usize> = None;
    let mut resident_dst: Option<(usize, bool)> = None;
    let mut pending_write = 0u64;
    let mut transfer_cycles = Vec::with_capacity(order.len());
    let mut tile_compute = Vec::with_capacity(order.len());
    let xfer = Transfers {
        bw: cfg.dram_bandwidth_bytes_per_cycle,
        latency: cfg.dram_latency_cycles,
    };

    for (k, &(i, j)) in order.iter().enumerate() {
        let (src_iv, dst_iv) = (intervals[i], intervals[j]);
        let mut read_words = 0u64;
        let mut write_words = 0u64;
        if resident_src != Some(i) {
            read_words += (src_iv.len() * f) as u64;
            resident_src = Some(i);
        }
        match resident_dst {
            Some((rj, _)) if rj == j => {}
            other => {
                if let Some((old, true)) = other {
                    write_words += (intervals[old].len() * h) as u64;
                }
                read_words += (dst_iv.len() * h) as u64;
            }
        }
        let edges = grid.shard(i, j);
        let edge_bytes = (edges.len() * cfg.edge_bytes) as u64;
        stats.vertex_read_words += read_words;
        stats.vertex_write_words += write_words;
        stats.edge_read_bytes += edge_bytes;
        transfer_cycles.push(xfer.cycles(pending_write + (read_words + write_words) * eb + edge_bytes));
        pending_write = 0;

        let tile_start = fe_free.max(agg_free).max(upd_free);

        let mut batches: Vec<Vec<Edge>> = vec![Vec::new(); src_iv.len().div_ceil(r)];
        for e in edges {
            batches[(e.src - src_iv.lo) as usize / r].push(*e);
        }
        for (b, batch_edges) in batches.iter().enumerate() {
            if batch_edges.is_empty() {
                continue;
            }
            let start = src_iv.lo + (b * r) as VertexId;
            let batch = SourceBatch::new(start, r.min((src_iv.hi - start) as usize));

            let fe_start = fe_free.max(agg_history[0]);
            let fe_end = fe_start + pre_cycles;
            fe_free = fe_end;
            stats.cycles_feature += pre_cycles;
            stats.feature_macs += batch.len as u64 * pre_macs;
            if cfg.trace && pre_cycles > 0 {
                trace.extend((0..batch.len).map(|s| TraceEvent {
                    cycle: fe_end - 1,
                    kind: TraceKind::FeatureReady,
                    vertex: start + s as VertexId,
                }));
            }

            let mut layout = hash_edges(batch_edges, r)?;
            if cfg.edge_reorganize {
                layout = reorganize(&layout, ring, &batch)?;
            }
            let ring_cycles = aggregate_cycles(&layout, ring, &batch, false)?;
            let mut penalty = 0u64;
            if let Some(cache) = davc.as_mut() {
                let times = consumption_times(&layout, ring, &batch)?;
                let mut stream: Vec<(u64, usize, VertexId)> = layout
                    .banks()
                    .iter()
                    .zip(&times)
                    .enumerate()
                    .flat_map(|(row, (bank, ts))| bank.iter().zip(ts).map(move |(e, &t)| (t, row, e.dst)))
                    .collect();
                stream.sort_unstable();
                let mut misses = vec![0u64; r];
                for (_, row, dst) in stream {
                    if !cache.access(dst) {
                        misses[row] += 1;
                    }
                }
                penalty = misses.iter().max().copied().unwrap_or(0) * cfg.result_bank_penalty_cycles;
            }
            let agg_cost = ring_cycles * agg_passes + penalty;
            let agg_start = fe_end.max(agg_free);
            let agg_end = agg_start + agg_cost;
            agg_free = agg_end;
            agg_history = [agg_history[1], agg_end];
            stats.cycles_aggregate += agg_cost;
            stats.pe_busy_cycles += (batch_edges.len() * costs.agg_dim) as u64;
            if cfg.trace {
                for e in batch_edges {
                    let slot = &mut last_contrib[e.dst as usize];
                    *slot = Some(slot.map_or(agg_end, |t: u64| t.max(agg_end)));
                }
            }
        }

        if last_visit[j] == k {
            for lo in (dst_iv.lo..dst_iv.hi).step_by(r) {
                let len = r.min((dst_iv.hi - lo) as usize);
                let start = fe_free.max(agg_free).max(upd_free);
                let end = start + post_cycles;
                upd_free = end;
                fe_free = end;
                agg_free = end;
                stats.cycles_update += post_cycles;
                stats.pe_busy_cycles += len as u64 * (post_macs + h as u64);
                if cfg.trace {
                    for v in lo..lo + len as VertexId {
                        if let Some(t) = last_contrib[v as usize] {
                            trace.push(TraceEvent {
                                cycle: t - 1,
                                kind: TraceKind::AggregateDone,
                                vertex: v,
                            });
                        }
                        trace.push(TraceEvent {
                            cycle: end - 1,
                            kind: TraceKind::UpdateDone,
                            vertex: v,
                        });
                    }
                }
            }
        }
        tile_compute.push(fe_free.max(agg_free).max(upd_free) - tile_start);

        resident_dst = Some((j, true));
        if let Some((rj, true)) = resident_dst {
            if (k + 1) % q == 0 {
                let words = (intervals[rj].len() * h) as u64;
                stats.vertex_write_words += words;
                pending_write = words * eb;
                resident_dst = Some((rj, false));
            }
        }
    }
    let final_write = xfer.cycles(pending_write);

    stats.cycles_stall = if cfg.prefetch_enabled {
        transfer_cycles.first().copied().unwrap_or(0)
            + transfer_cycles
                .iter()
                .skip(1)
                .zip(&tile_compute)
                .map(|(&t, &prev)| t.saturating_sub(prev))
                .sum::<u64>()
            + final_write
    } else {
        transfer_cycles.iter().sum::<u64>() + final_write
    };
    stats.pe_busy_cycles += stats.feature_macs;
    stats.cycles_compute = fe_free.max(agg_free).max(upd_free);
    stats.cycles_fill = (r + c) as u64;
    stats.cycles_total = stats.cycles_compute + stats.cycles_stall + stats.cycles_fill;
    stats.dram_read_bytes = stats.vertex_read_words * eb + stats.edge_read_bytes;
    stats.dram_write_bytes = stats.vertex_write_words * eb;
    if let Some(cache) = &davc {
        stats.davc_hits = cache.hits;
        stats.davc_misses = cache.misses;
    }
    let lanes = (r * c) as f64;
    stats.utilization = stats.pe_busy_cycles as f64 / (stats.cycles_total as f64 * lanes);
    stats.feature_utilization = if stats.cycles_feature == 0 {
        0.0
    } else {
        stats.feature_macs as f64 / (stats.cycles_feature as f64 * lanes)
    };
    let io = io_cost(q as u64, f as u64, h as u64)?;
    stats.analytic_read_words = io.read(plan.tile_order.major) * n as u64 / q as u64;
    stats.analytic_write_words = io.write(plan.tile_order.major) * n as u64 / q as u64;

    trace.sort_unstable();
    Ok(SimOutput { output, stats, trace })
}
