//! Analytic planning: stage reordering, operation counts, the tile I/O cost
//! model, tile visiting orders and the PE-array map strategies.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{EngnError, Result};
use crate::model::{Aggregator, ModelKind};

/// FAU: feature extraction, aggregate, update. AFU: aggregate first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StageOrder {
    Fau,
    Afu,
}

impl fmt::Display for StageOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageOrder::Fau => "FAU",
            StageOrder::Afu => "AFU",
        })
    }
}

impl FromStr for StageOrder {
    type Err = EngnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fau" => Ok(StageOrder::Fau),
            "afu" => Ok(StageOrder::Afu),
            other => Err(EngnError::InvalidArgument(format!("unknown stage order {other:?}"))),
        }
    }
}

/// Whether aggregate may be moved ahead of feature extraction.
pub fn reorder_legal(aggregator: Aggregator, kind: ModelKind) -> bool {
    aggregator == Aggregator::Sum && kind == ModelKind::Gcn
}

/// Dimension-aware stage reordering: aggregate over whichever of F and H is
/// narrower. Ties and illegal reorderings keep FAU.
pub fn dasr_decide(f: usize, h: usize, aggregator: Aggregator, kind: ModelKind) -> StageOrder {
    if reorder_legal(aggregator, kind) && f < h {
        StageOrder::Afu
    } else {
        StageOrder::Fau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub macs: u64,
    pub accumulations: u64,
}

/// MACs are `N*F*H` in either order; aggregation accumulates `E*H` values
/// under FAU and `E*F` under AFU.
pub fn count_ops(n: u64, e: u64, f: u64, h: u64, order: StageOrder) -> OpCounts {
    OpCounts {
        macs: n * f * h,
        accumulations: match order {
            StageOrder::Fau => e * h,
            StageOrder::Afu => e * f,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TileMajor {
    Column,
    Row,
}

impl fmt::Display for TileMajor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TileMajor::Column => "column",
            TileMajor::Row => "row",
        })
    }
}

impl FromStr for TileMajor {
    type Err = EngnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "column" | "col" => Ok(TileMajor::Column),
            "row" => Ok(TileMajor::Row),
            other => Err(EngnError::InvalidArgument(format!("unknown tile order {other:?}"))),
        }
    }
}

/// Vertex-property words moved between DRAM and the chip for one layer, in
/// units of one interval's properties (multiply by the interval length for
/// words).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IoCostReport {
    pub q: u64,
    pub f: u64,
    pub h: u64,
    pub read_col: u64,
    pub write_col: u64,
    pub read_row: u64,
    pub write_row: u64,
    pub chosen: TileMajor,
}

impl IoCostReport {
    pub fn total_col(&self) -> u64 {
        self.read_col + self.write_col
    }

    pub fn total_row(&self) -> u64 {
        self.read_row + self.write_row
    }

    pub fn total_chosen(&self) -> u64 {
        match self.chosen {
            TileMajor::Column => self.total_col(),
            TileMajor::Row => self.total_row(),
        }
    }

    pub fn read(&self, major: TileMajor) -> u64 {
        match major {
            TileMajor::Column => self.read_col,
            TileMajor::Row => self.read_row,
        }
    }

    pub fn write(&self, major: TileMajor) -> u64 {
        match major {
            TileMajor::Column => self.write_col,
            TileMajor::Row => self.write_row,
        }
    }
}

/// S-shape tile I/O closed forms:
///
/// | order  | read                    | write  |
/// |--------|-------------------------|--------|
/// | column | `(Q^2 - Q + 1) F + Q H` | `Q H`  |
/// | row    | `Q F + (Q^2 - Q + 1) H` | `Q^2 H`|
///
/// Column wins ties.
pub fn io_cost(q: u64, f: u64, h: u64) -> Result<IoCostReport> {
    if q == 0 {
        return Err(EngnError::InvalidArgument("q must be at least 1".into()));
    }
    let reuse = q * q - q + 1;
    let read_col = reuse * f + q * h;
    let write_col = q * h;
    let read_row = q * f + reuse * h;
    let write_row = q * q * h;
    let chosen = if read_col + write_col <= read_row + write_row {
        TileMajor::Column
    } else {
        TileMajor::Row
    };
    Ok(IoCostReport {
        q,
        f,
        h,
        read_col,
        write_col,
        read_row,
        write_row,
        chosen,
    })
}

/// Visiting order of the Q x Q tiles; `(i, j)` is (source interval,
/// destination interval).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TileOrder {
    pub tiles: Vec<(usize, usize)>,
    pub major: TileMajor,
    pub s_shape: bool,
}

impl TileOrder {
    pub fn q(&self) -> usize {
        (self.tiles.len() as f64).sqrt().round() as usize
    }
}

/// Column-major walks destination intervals in the outer loop; row-major
/// walks source intervals. With `s_shape`, odd outer steps run the inner
/// loop backwards so the boundary tiles of consecutive lines share data.
pub fn tile_order(q: usize, major: TileMajor, s_shape: bool) -> TileOrder {
    let mut tiles = Vec::with_capacity(q * q);
    for outer in 0..q {
        let reverse = s_shape && outer % 2 == 1;
        for step in 0..q {
            let inner = if reverse { q - 1 - step } else { step };
            tiles.push(match major {
                TileMajor::Column => (inner, outer),
                TileMajor::Row => (outer, inner),
            });
        }
    }
    TileOrder {
        tiles,
        major,
        s_shape,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MapStrategy {
    /// Vertex stationary.
    Vs,
    /// Vertex-feature stationary.
    Vfs,
    /// Hybrid stationary, the mapping the GPA dataflow uses.
    Hs,
}

impl FromStr for MapStrategy {
    type Err = EngnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vs" => Ok(MapStrategy::Vs),
            "vfs" => Ok(MapStrategy::Vfs),
            "hs" => Ok(MapStrategy::Hs),
            other => Err(EngnError::InvalidArgument(format!("unknown map strategy {other:?}"))),
        }
    }
}

impl fmt::Display for MapStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapStrategy::Vs => "VS",
            MapStrategy::Vfs => "VFS",
            MapStrategy::Hs => "HS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapStrategyReport {
    pub strategy: MapStrategy,
    pub latency_cycles: f64,
    pub bandwidth_words: u64,
    pub utilization: f64,
}

/// Latency `N F H / (R C)` for every strategy; on-chip bandwidth `R C + 1`
/// for VS/VFS and `R + C` for HS. HS utilization counts the padded columns
/// of the last weight slice as idle: `H / (C * ceil(H / C))`.
pub fn map_strategy_metrics(
    strategy: MapStrategy,
    n: u64,
    f: u64,
    h: u64,
    r: u64,
    c: u64,
) -> Result<MapStrategyReport> {
    if r == 0 || c == 0 {
        return Err(EngnError::InvalidArgument("PE array dims must be positive".into()));
    }
    let latency_cycles = (n * f * h) as f64 / (r * c) as f64;
    let (bandwidth_words, utilization) = match strategy {
        MapStrategy::Vs | MapStrategy::Vfs => (r * c + 1, 1.0),
        MapStrategy::Hs => {
            let util = if h == 0 {
                1.0
            } else {
                h as f64 / (c * h.div_ceil(c)) as f64
            };
            (r + c, util)
        }
    };
    Ok(MapStrategyReport {
        strategy,
        latency_cycles,
        bandwidth_words,
        utilization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dasr_cora_shape() {
        assert_eq!(dasr_decide(1433, 16, Aggregator::Sum, ModelKind::Gcn), StageOrder::Fau);
        let fau = count_ops(2708, 10556, 1433, 16, StageOrder::Fau);
        let afu = count_ops(2708, 10556, 1433, 16, StageOrder::Afu);
        assert_eq!(fau.accumulations, 168_896);
        assert_eq!(afu.accumulations, 15_126_748);
        assert_eq!(fau.macs, afu.macs);
        assert_eq!(fau.macs, 2708 * 1433 * 16);
    }

    #[test]
    fn dasr_tie_and_illegal() {
        assert_eq!(dasr_decide(32, 32, Aggregator::Sum, ModelKind::Gcn), StageOrder::Fau);
        assert_eq!(dasr_decide(8, 512, Aggregator::Max, ModelKind::GsPool), StageOrder::Fau);
        assert_eq!(dasr_decide(8, 512, Aggregator::Sum, ModelKind::Grn), StageOrder::Fau);
        assert_eq!(dasr_decide(8, 512, Aggregator::Sum, ModelKind::Gcn), StageOrder::Afu);
        assert_eq!(count_ops(10, 0, 4, 4, StageOrder::Afu).accumulations, 0);
    }

    #[test]
    fn io_cost_examples() {
        let one = io_cost(1, 5, 3).unwrap();
        assert_eq!((one.read_col, one.write_col), (8, 3));
        assert_eq!((one.read_row, one.write_row), (8, 3));
        assert_eq!(one.chosen, TileMajor::Column);

        let a = io_cost(4, 8, 2).unwrap();
        assert_eq!((a.read_col, a.write_col, a.total_col()), (112, 8, 120));
        assert_eq!((a.read_row, a.write_row, a.total_row()), (58, 32, 90));
        assert_eq!(a.chosen, TileMajor::Row);

        let b = io_cost(4, 2, 8).unwrap();
        assert_eq!(b.total_col(), 90);
        assert_eq!(b.total_row(), 240);
        assert_eq!(b.chosen, TileMajor::Column);

        assert!(io_cost(0, 1, 1).is_err());
    }

    #[test]
    fn tile_orders() {
        assert_eq!(
            tile_order(2, TileMajor::Column, true).tiles,
            vec![(0, 0), (1, 0), (1, 1), (0, 1)]
        );
        for major in [TileMajor::Column, TileMajor::Row] {
            for s in [false, true] {
                assert_eq!(tile_order(1, major, s).tiles, vec![(0, 0)]);
            }
        }
        let raster = tile_order(3, TileMajor::Row, false);
        let want: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        assert_eq!(raster.tiles, want);
        assert_eq!(raster.q(), 3);
    }

    #[test]
    fn map_strategies() {
        let hs = map_strategy_metrics(MapStrategy::Hs, 128, 64, 32, 128, 16).unwrap();
        assert_eq!(hs.latency_cycles, 128.0);
        assert_eq!(hs.bandwidth_words, 144);
        assert_eq!(hs.utilization, 1.0);
        let vs = map_strategy_metrics(MapStrategy::Vs, 1, 1, 1, 32, 32).unwrap();
        assert_eq!(vs.bandwidth_words, 1025);
        let padded = map_strategy_metrics(MapStrategy::Hs, 1, 1, 20, 128, 16).unwrap();
        assert_eq!(padded.utilization, 20.0 / 32.0);
        assert!(map_strategy_metrics(MapStrategy::Hs, 1, 1, 1, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn decision_rule_matches_exact_expansion(q in 2u64..64, f in 1u64..4096, h in 1u64..4096) {
            let r = io_cost(q, f, h).unwrap();
            let lhs = (q as i128 - 1) * ((q as i128 - 1) * f as i128 - (2 * q as i128 - 1) * h as i128);
            prop_assert_eq!(r.total_col() as i128 - r.total_row() as i128, lhs);
            prop_assert_eq!(r.chosen == TileMajor::Column, lhs <= 0);
            prop_assert!(r.total_chosen() <= r.total_col().min(r.total_row()));
        }

        #[test]
        fn tile_order_is_permutation(q in 1usize..12, col in any::<bool>(), s in any::<bool>()) {
            let major = if col { TileMajor::Column } else { TileMajor::Row };
            let t = tile_order(q, major, s);
            let mut seen = t.tiles.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), q * q);
            if s {
                // consecutive tiles share an interval on every step
                for w in t.tiles.windows(2) {
                    prop_assert!(w[0].0 == w[1].0 || w[0].1 == w[1].1);
                }
            }
        }

        #[test]
        fn dasr_argmin(n in 1u64..10_000, e in 0u64..100_000, f in 1u64..2048, h in 1u64..2048) {
            let chosen = dasr_decide(f as usize, h as usize, Aggregator::Sum, ModelKind::Gcn);
            let other = match chosen { StageOrder::Fau => StageOrder::Afu, StageOrder::Afu => StageOrder::Fau };
            prop_assert!(count_ops(n, e, f, h, chosen).accumulations <= count_ops(n, e, f, h, other).accumulations);
        }
    }
}
