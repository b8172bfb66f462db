//! Spatial schedules of the PE array: edge hashing into per-row banks, the
//! ring-edge-reduce arrival pattern, edge reorganization and the per-stage
//! cycle formulas.

use std::io::Write;

use serde::Serialize;

use crate::error::{EngnError, Result};
use crate::graph::{Edge, VertexId};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Source properties rotate northward around a ring of `r` PE rows. At cycle
/// `t` row `row` holds the property in source slot `(row + t) mod r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingSchedule {
    r: usize,
}

impl RingSchedule {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(EngnError::InvalidArgument("ring length must be at least 1".into()));
        }
        Ok(RingSchedule { r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn arrival(&self, row: usize, t: u64) -> usize {
        ((row as u64 + t) % self.r as u64) as usize
    }

    /// Cycles after the start of a rotation until `slot` reaches `row`.
    pub fn offset(&self, row: usize, slot: usize) -> usize {
        (slot % self.r + self.r - row % self.r) % self.r
    }
}

/// A contiguous run of source vertices loaded into the ring together; vertex
/// `start + k` occupies slot `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceBatch {
    pub start: VertexId,
    pub len: usize,
}

impl SourceBatch {
    pub fn new(start: VertexId, len: usize) -> Self {
        SourceBatch { start, len }
    }

    pub fn slot_of(&self, v: VertexId) -> Option<usize> {
        let k = v.checked_sub(self.start)? as usize;
        (k < self.len).then_some(k)
    }

    fn slot(&self, e: &Edge) -> Result<usize> {
        self.slot_of(e.src).ok_or_else(|| {
            EngnError::InvalidArgument(format!(
                "edge {}->{} has a source outside batch [{}, {})",
                e.src,
                e.dst,
                self.start,
                self.start as u64 + self.len as u64
            ))
        })
    }
}

/// Edges of one source batch distributed over the `r` row banks.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBankLayout {
    r: usize,
    banks: Vec<Vec<Edge>>,
}

impl EdgeBankLayout {
    pub fn from_banks(banks: Vec<Vec<Edge>>) -> Result<Self> {
        let r = banks.len();
        if r == 0 {
            return Err(EngnError::InvalidArgument("layout needs at least one bank".into()));
        }
        if let Some((k, e)) = banks
            .iter()
            .enumerate()
            .find_map(|(k, b)| b.iter().find(|e| e.dst as usize % r != k).map(|e| (k, e)))
        {
            return Err(EngnError::InvalidArgument(format!(
                "edge {}->{} placed in bank {k} of {r}",
                e.src, e.dst
            )));
        }
        Ok(EdgeBankLayout { r, banks })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn banks(&self) -> &[Vec<Edge>] {
        &self.banks
    }

    pub fn num_edges(&self) -> usize {
        self.banks.iter().map(Vec::len).sum()
    }

    pub fn max_bank_len(&self) -> usize {
        self.banks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.banks.iter().all(Vec::is_empty)
    }

    pub fn flatten(&self) -> Vec<Edge> {
        self.banks.iter().flatten().copied().collect()
    }
}

/// Bank of an edge is `dst mod r`; relative order within a bank is kept.
pub fn hash_edges(edges: &[Edge], r: usize) -> Result<EdgeBankLayout> {
    if r == 0 {
        return Err(EngnError::InvalidArgument("ring length must be at least 1".into()));
    }
    let mut banks = vec![Vec::new(); r];
    for e in edges {
        banks[e.dst as usize % r].push(*e);
    }
    Ok(EdgeBankLayout { r, banks })
}

/// Reorders one bank so that it never waits on the ring longer than needed.
///
/// Each edge is tagged with its arrival offset; the k-th edge carrying a
/// given offset is assigned to rotation k, and the bank is sorted by
/// (rotation, offset). When every offset is distinct this is a plain stable
/// sort by offset.
pub fn reorganize_bank(bank: &[Edge], row: usize, ring: RingSchedule, batch: &SourceBatch) -> Result<Vec<Edge>> {
    let mut seen = vec![0usize; ring.r()];
    let mut keyed = Vec::with_capacity(bank.len());
    for e in bank {
        let off = ring.offset(row, batch.slot(e)?);
        keyed.push((seen[off], off, *e));
        seen[off] += 1;
    }
    keyed.sort_by_key(|&(round, off, _)| (round, off));
    Ok(keyed.into_iter().map(|(_, _, e)| e).collect())
}

pub fn reorganize(layout: &EdgeBankLayout, ring: RingSchedule, batch: &SourceBatch) -> Result<EdgeBankLayout> {
    check_ring(layout, ring)?;
    let banks = layout
        .banks
        .iter()
        .enumerate()
        .map(|(row, b)| reorganize_bank(b, row, ring, batch))
        .collect::<Result<_>>()?;
    Ok(EdgeBankLayout { r: layout.r, banks })
}

fn check_ring(layout: &EdgeBankLayout, ring: RingSchedule) -> Result<()> {
    if layout.r != ring.r() {
        return Err(EngnError::DimensionMismatch(format!(
            "layout has {} banks but the ring has {} rows",
            layout.r,
            ring.r()
        )));
    }
    Ok(())
}

/// Cycle at which each edge is consumed, bank by bank. A bank only ever
/// looks at its head edge and waits until the matching source arrives.
pub fn consumption_times(layout: &EdgeBankLayout, ring: RingSchedule, batch: &SourceBatch) -> Result<Vec<Vec<u64>>> {
    check_ring(layout, ring)?;
    let r = ring.r() as u64;
    layout
        .banks
        .iter()
        .enumerate()
        .map(|(row, bank)| {
            let mut t = 0u64;
            bank.iter()
                .map(|e| {
                    let off = ring.offset(row, batch.slot(e)?) as u64;
                    let wait = (off + r - t % r) % r;
                    let at = t + wait;
                    t = at + 1;
                    Ok(at)
                })
                .collect()
        })
        .collect()
}

/// Ring cycles needed to drain the layout. The ring only stops at a
/// rotation boundary, so the count is a whole number of rotations covering
/// the last consumption, or 0 when every bank is empty.
pub fn aggregate_cycles(
    layout: &EdgeBankLayout,
    ring: RingSchedule,
    batch: &SourceBatch,
    reorganized: bool,
) -> Result<u64> {
    let owned;
    let layout = if reorganized {
        owned = reorganize(layout, ring, batch)?;
        &owned
    } else {
        layout
    };
    let last = consumption_times(layout, ring, batch)?
        .iter()
        .filter_map(|b| b.last().copied())
        .max();
    let r = ring.r() as u64;
    Ok(match last {
        None => 0,
        Some(t) => r * (t + 1).div_ceil(r),
    })
}

/// One row per edge of a layout, for inspection dumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BankScheduleRow {
    pub bank: usize,
    pub position: usize,
    pub src: VertexId,
    pub dst: VertexId,
    pub slot: usize,
    pub offset: usize,
    pub cycle: u64,
}

pub fn bank_schedule(layout: &EdgeBankLayout, ring: RingSchedule, batch: &SourceBatch) -> Result<Vec<BankScheduleRow>> {
    let times = consumption_times(layout, ring, batch)?;
    let mut rows = Vec::with_capacity(layout.num_edges());
    for (bank, (edges, ts)) in layout.banks.iter().zip(&times).enumerate() {
        for (position, (e, &cycle)) in edges.iter().zip(ts).enumerate() {
            let slot = batch.slot(e)?;
            rows.push(BankScheduleRow {
                bank,
                position,
                src: e.src,
                dst: e.dst,
                slot,
                offset: ring.offset(bank, slot),
                cycle,
            });
        }
    }
    Ok(rows)
}

pub fn write_bank_schedule_csv<W: Write>(rows: &[BankScheduleRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| EngnError::Report(e.to_string()))?;
    }
    w.flush().map_err(|e| EngnError::Report(e.to_string()))?;
    Ok(())
}

/// Feature extraction streams one input dimension per cycle through every
/// weight slice: `batches * f * ceil(h / c)` cycles.
pub fn feature_cycles(f: usize, h: usize, c: usize, batches: usize) -> Result<u64> {
    if f == 0 || h == 0 || c == 0 {
        return Err(EngnError::InvalidArgument(format!(
            "feature_cycles needs positive dims, got f={f} h={h} c={c}"
        )));
    }
    Ok(batches as u64 * f as u64 * h.div_ceil(c) as u64)
}

/// Weight matrix split column-wise into slices no wider than the array.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPartition<S> {
    pub h: usize,
    pub c: usize,
    pub parts: Vec<Matrix<S>>,
}

impl<S: Scalar> WeightPartition<S> {
    pub fn new(w: &Matrix<S>, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(EngnError::InvalidArgument("array must have at least one column".into()));
        }
        let h = w.cols();
        let parts = (0..h)
            .step_by(c)
            .map(|lo| w.col_slice(lo, (lo + c).min(h)))
            .collect();
        Ok(WeightPartition { h, c, parts })
    }

    pub fn reassemble(&self) -> Result<Matrix<S>> {
        Matrix::hconcat(&self.parts)
    }
}
