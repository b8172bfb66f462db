use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::engine::{default_q, simulate_layer, Plan, SimStats};
use crate::error::{EngnError, Result};
use crate::fixed::Fixed32;
use crate::graph::{grid_partition, Graph};
use crate::matrix::Matrix;
use crate::model::LayerSpec;
use crate::schedule::{tile_order, StageOrder, TileMajor};

/// One configuration of a sweep. `None` fields are resolved per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub cfg: SimConfig,
    pub q: Option<usize>,
    pub order: Option<StageOrder>,
    pub major: Option<TileMajor>,
}

impl SweepPoint {
    pub fn new(cfg: SimConfig) -> Self {
        SweepPoint {
            cfg,
            q: None,
            order: None,
            major: None,
        }
    }

    /// Like `SimConfig::set`, plus the plan keys `q`, `order` and `tile_order`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim().replace('-', "_").as_str() {
            "q" => {
                self.q = match value.trim() {
                    "auto" => None,
                    v => Some(v.parse().map_err(|_| EngnError::InvalidArgument(format!("bad q {v:?}")))?),
                }
            }
            "order" => {
                self.order = match value.trim() {
                    "auto" => None,
                    v => Some(v.parse()?),
                }
            }
            "tile_order" | "major" => {
                self.major = match value.trim() {
                    "auto" | "adaptive" => None,
                    v => Some(v.parse()?),
                }
            }
            _ => self.cfg.set(key, value)?,
        }
        Ok(())
    }
}

/// Parses `key=v1,v2,...` axes.
pub fn parse_sweep_axis(spec: &str) -> Result<(String, Vec<String>)> {
    let (k, vs) = spec
        .split_once('=')
        .ok_or_else(|| EngnError::InvalidArgument(format!("sweep axis {spec:?} is not key=v1,v2,...")))?;
    let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(EngnError::InvalidArgument(format!("sweep axis {k:?} has no values")));
    }
    Ok((k.trim().to_string(), values))
}

/// Cross product of all axes over `base`; the last axis varies fastest.
pub fn sweep_points(base: &SweepPoint, axes: &[(String, Vec<String>)]) -> Result<Vec<SweepPoint>> {
    let mut points = vec![base.clone()];
    for (key, values) in axes {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for v in values {
                let mut p = p.clone();
                p.set(key, v)?;
                next.push(p);
            }
        }
        points = next;
    }
    Ok(points)
}

/// Flat report row: one per (sweep point, layer).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub point: usize,
    pub layer: usize,
    pub model: String,
    pub aggregator: String,
    pub f: usize,
    pub h: usize,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub seed: u64,
    pub q: usize,
    pub order: String,
    pub tile_order: String,
    pub s_shape: bool,
    pub rows: usize,
    pub cols: usize,
    pub rf_words: usize,
    pub davc_enabled: bool,
    pub davc_bytes: usize,
    pub rho: f64,
    pub davc_line_words: usize,
    pub result_bank_bytes: usize,
    pub result_bank_penalty_cycles: u64,
    pub dram_bandwidth_bytes_per_cycle: u64,
    pub dram_latency_cycles: u64,
    pub element_bytes: usize,
    pub edge_bytes: usize,
    pub prefetch_enabled: bool,
    pub edge_reorganize: bool,
    pub cycles_feature: u64,
    pub cycles_aggregate: u64,
    pub cycles_update: u64,
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
    pub davc_hit_rate: f64,
    pub pe_busy_cycles: u64,
    pub feature_macs: u64,
    pub feature_utilization: f64,
    pub utilization: f64,
    pub analytic_read_words: u64,
    pub analytic_write_words: u64,
}

impl ReportRow {
    fn new(point: usize, layer: usize, spec: &LayerSpec, g: &Graph, seed: u64, plan: &Plan, q: usize, cfg: &SimConfig, s: &SimStats) -> Self {
        ReportRow {
            point,
            layer,
            model: spec.kind().to_string(),
            aggregator: spec.aggregator().to_string(),
            f: spec.f(),
            h: spec.h(),
            num_vertices: g.num_vertices(),
            num_edges: g.num_edges(),
            seed,
            q,
            order: plan.order.to_string(),
            tile_order: plan.tile_order.major.to_string(),
            s_shape: plan.tile_order.s_shape,
            rows: cfg.rows,
            cols: cfg.cols,
            rf_words: cfg.rf_words,
            davc_enabled: cfg.davc_enabled,
            davc_bytes: cfg.davc_bytes,
            rho: cfg.rho,
            davc_line_words: cfg.davc_line_words,
            result_bank_bytes: cfg.result_bank_bytes,
            result_bank_penalty_cycles: cfg.result_bank_penalty_cycles,
            dram_bandwidth_bytes_per_cycle: cfg.dram_bandwidth_bytes_per_cycle,
            dram_latency_cycles: cfg.dram_latency_cycles,
            element_bytes: cfg.element_bytes,
            edge_bytes: cfg.edge_bytes,
            prefetch_enabled: cfg.prefetch_enabled,
            edge_reorganize: cfg.edge_reorganize,
            cycles_feature: s.cycles_feature,
            cycles_aggregate: s.cycles_aggregate,
            cycles_update: s.cycles_update,
            cycles_compute: s.cycles_compute,
            cycles_stall: s.cycles_stall,
            cycles_fill: s.cycles_fill,
            cycles_total: s.cycles_total,
            dram_read_bytes: s.dram_read_bytes,
            dram_write_bytes: s.dram_write_bytes,
            vertex_read_words: s.vertex_read_words,
            vertex_write_words: s.vertex_write_words,
            edge_read_bytes: s.edge_read_bytes,
            davc_hits: s.davc_hits,
            davc_misses: s.davc_misses,
            davc_hit_rate: s.davc_hit_rate(),
            pe_busy_cycles: s.pe_busy_cycles,
            feature_macs: s.feature_macs,
            feature_utilization: s.feature_utilization,
            utilization: s.utilization,
            analytic_read_words: s.analytic_read_words,
            analytic_write_words: s.analytic_write_words,
        }
    }
}

fn run_point(g: &Graph, layers: &[LayerSpec], point: &SweepPoint, index: usize, seed: u64) -> Result<Vec<ReportRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut props: Matrix<Fixed32> = Matrix::random(g.num_vertices(), layers[0].f(), 1.0, &mut rng).to_fixed();
    let mut rows = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let q = match point.q {
            Some(q) => q,
            None => default_q(g.num_vertices(), layer.h(), &point.cfg)?,
        };
        let mut plan = Plan::auto(layer, q)?;
        if let Some(order) = point.order {
            plan.order = order;
        }
        if let Some(major) = point.major {
            plan.tile_order = tile_order(q, major, true);
        }
        let tiles = grid_partition(g, q)?;
        let out = simulate_layer(g, &tiles, layer, &props, &plan, &point.cfg)?;
        rows.push(ReportRow::new(index, l, layer, g, seed, &plan, q, &point.cfg, &out.stats));
        props = out.output;
    }
    Ok(rows)
}

/// Runs every layer of the stack at every sweep point, feeding each layer's
/// fixed-point output into the next. Points run in parallel; rows come back
/// in point order.
pub fn run_report(g: &Graph, layers: &[LayerSpec], points: &[SweepPoint], seed: u64) -> Result<Vec<ReportRow>> {
    if layers.is_empty() {
        return Err(EngnError::Empty("layer stack".into()));
    }
    if g.num_vertices() == 0 {
        return Err(EngnError::Empty("graph".into()));
    }
    for w in layers.windows(2) {
        if w[0].h() != w[1].f() {
            return Err(EngnError::DimensionMismatch(format!(
                "layer output {} feeds a layer expecting {}",
                w[0].h(),
                w[1].f()
            )));
        }
    }
    let per_point: Vec<Result<Vec<ReportRow>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| run_point(g, layers, p, i, seed))
        .collect();
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_jsonl<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    for row in rows {
        let line = serde_json::to_string(row).map_err(|e| EngnError::Report(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| EngnError::Report(e.to_string()))?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| EngnError::Report(e.to_string()))?;
    }
    w.flush().map_err(|e| EngnError::Report(e.to_string()))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| EngnError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| EngnError::io(path, e))
}
