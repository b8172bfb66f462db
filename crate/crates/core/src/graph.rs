//! Graph ingestion, synthetic generation and grid tiling.
//!
//! Graphs are directed multigraphs held as a coordinate list. After
//! construction the edge list is sorted by `(dst, src, relation)`, which fixes
//! the reduction order of every aggregation downstream.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{EngnError, Result};

pub type VertexId = u32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub relation: Option<u16>,
    pub weight: Option<f64>,
}

impl Edge {
    pub fn new(src: VertexId, dst: VertexId) -> Self {
        Edge {
            src,
            dst,
            relation: None,
            weight: None,
        }
    }

    pub fn with_relation(src: VertexId, dst: VertexId, relation: u16) -> Self {
        Edge {
            src,
            dst,
            relation: Some(relation),
            weight: None,
        }
    }

    /// Canonical sort key. `None` relations order before any explicit one.
    pub fn sort_key(&self) -> (VertexId, VertexId, Option<u16>) {
        (self.dst, self.src, self.relation)
    }

    pub fn relation_index(&self) -> usize {
        self.relation.map(usize::from).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<Edge>,
    in_degree: Vec<u64>,
    out_degree: Vec<u64>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, validating ids and sorting
    /// the edges canonically (stable, so equal keys keep input order).
    pub fn from_edges(num_vertices: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if num_vertices == 0 {
            return Err(EngnError::InvalidArgument(
                "graph must have at least one vertex".into(),
            ));
        }
        if num_vertices > VertexId::MAX as usize {
            return Err(EngnError::InvalidArgument(format!(
                "num_vertices {num_vertices} exceeds the 32-bit id space"
            )));
        }
        let mut in_degree = vec![0u64; num_vertices];
        let mut out_degree = vec![0u64; num_vertices];
        for e in &edges {
            for id in [e.src, e.dst] {
                if id as usize >= num_vertices {
                    return Err(EngnError::VertexOutOfRange {
                        id: id as u64,
                        num_vertices,
                    });
                }
            }
            in_degree[e.dst as usize] += 1;
            out_degree[e.src as usize] += 1;
        }
        edges.sort_by_key(Edge::sort_key);
        Ok(Graph {
            num_vertices,
            edges,
            in_degree,
            out_degree,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn in_degree(&self) -> &[u64] {
        &self.in_degree
    }

    pub fn out_degree(&self) -> &[u64] {
        &self.out_degree
    }

    /// Number of distinct relation ids (at least 1).
    pub fn num_relations(&self) -> usize {
        self.edges
            .iter()
            .map(|e| e.relation_index() + 1)
            .max()
            .unwrap_or(1)
    }

    /// Re-checks every structural invariant. Cheap enough to run on load.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vertices;
        let mut ind = vec![0u64; n];
        let mut outd = vec![0u64; n];
        for w in self.edges.windows(2) {
            if w[0].sort_key() > w[1].sort_key() {
                return Err(EngnError::InvalidArgument(
                    "edge list is not in canonical order".into(),
                ));
            }
        }
        for e in &self.edges {
            if e.src as usize >= n || e.dst as usize >= n {
                return Err(EngnError::VertexOutOfRange {
                    id: e.src.max(e.dst) as u64,
                    num_vertices: n,
                });
            }
            ind[e.dst as usize] += 1;
            outd[e.src as usize] += 1;
        }
        if ind != self.in_degree || outd != self.out_degree {
            return Err(EngnError::InvalidArgument(
                "degree arrays disagree with the edge list".into(),
            ));
        }
        Ok(())
    }
}

/// Parses the whitespace-separated `src dst [relation] [weight]` text format.
/// Lines starting with `#` and blank lines are skipped.
pub fn parse_edge_list<R: BufRead>(reader: R, num_vertices: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| EngnError::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 4 {
            return Err(EngnError::Parse {
                line: lineno,
                msg: format!("expected `src dst [relation] [weight]`, got {body:?}"),
            });
        }
        let id = |s: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|_| EngnError::Parse {
                line: lineno,
                msg: format!("invalid vertex id {s:?}"),
            })
        };
        let src = id(fields[0])?;
        let dst = id(fields[1])?;
        let relation = match fields.get(2) {
            Some(s) => Some(s.parse::<u16>().map_err(|_| EngnError::Parse {
                line: lineno,
                msg: format!("invalid relation id {s:?}"),
            })?),
            None => None,
        };
        let weight = match fields.get(3) {
            Some(s) => Some(s.parse::<f64>().map_err(|_| EngnError::Parse {
                line: lineno,
                msg: format!("invalid edge weight {s:?}"),
            })?),
            None => None,
        };
        for v in [src, dst] {
            if v > VertexId::MAX as u64 {
                return Err(EngnError::Parse {
                    line: lineno,
                    msg: format!("vertex id {v} exceeds the 32-bit id space"),
                });
            }
            if let Some(n) = num_vertices {
                if v >= n as u64 {
                    return Err(EngnError::VertexOutOfRange {
                        id: v,
                        num_vertices: n,
                    });
                }
            }
        }
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push(Edge {
            src: src as VertexId,
            dst: dst as VertexId,
            relation,
            weight,
        });
    }
    let Some(max_id) = max_id else {
        return Err(EngnError::Empty("edge list contains no edges".into()));
    };
    let n = num_vertices.unwrap_or(max_id as usize + 1);
    Graph::from_edges(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>, num_vertices: Option<usize>) -> Result<Graph> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| EngnError::io(path, e))?;
    parse_edge_list(BufReader::new(file), num_vertices)
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(g.num_edges() * 12);
    writeln!(out, "# vertices {} edges {}", g.num_vertices(), g.num_edges()).unwrap();
    for e in g.edges() {
        match (e.relation, e.weight) {
            (None, None) => writeln!(out, "{} {}", e.src, e.dst),
            (Some(r), None) => writeln!(out, "{} {} {}", e.src, e.dst, r),
            (r, Some(w)) => writeln!(out, "{} {} {} {}", e.src, e.dst, r.unwrap_or(0), w),
        }
        .unwrap();
    }
    fs::write(path, out).map_err(|e| EngnError::io(path, e))
}

/// Quadrant probabilities of the recursive-matrix generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for RmatParams {
    fn default() -> Self {
        RmatParams {
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
        }
    }
}

pub fn generate_synthetic(n: usize, e: usize, seed: u64) -> Result<Graph> {
    generate_rmat(n, e, seed, RmatParams::default())
}

/// RMAT-style generator. Ids outside `[0, n)` and repeated `(src, dst)`
/// pairs are redrawn so the edge count is exact.
pub fn generate_rmat(n: usize, e: usize, seed: u64, params: RmatParams) -> Result<Graph> {
    if n < 2 {
        return Err(EngnError::InvalidArgument(format!(
            "synthetic graph needs n >= 2, got {n}"
        )));
    }
    if e == 0 {
        return Err(EngnError::InvalidArgument(
            "synthetic graph needs at least one edge".into(),
        ));
    }
    if (e as u128) > (n as u128) * (n as u128) {
        return Err(EngnError::InvalidArgument(format!(
            "{e} distinct edges do not fit in a {n}-vertex graph"
        )));
    }
    let total = params.a + params.b + params.c + params.d;
    if !(total > 0.0) || [params.a, params.b, params.c, params.d].iter().any(|p| *p < 0.0) {
        return Err(EngnError::InvalidArgument(
            "RMAT probabilities must be non-negative with a positive sum".into(),
        ));
    }
    let (pa, pb, pc) = (params.a / total, params.b / total, params.c / total);
    let scale = usize::BITS - (n - 1).leading_zeros();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(e);
    let mut edges = Vec::with_capacity(e);
    while edges.len() < e {
        let (mut src, mut dst) = (0usize, 0usize);
        for _ in 0..scale {
            let p: f64 = rng.gen();
            let (row_bit, col_bit) = if p < pa {
                (0, 0)
            } else if p < pa + pb {
                (0, 1)
            } else if p < pa + pb + pc {
                (1, 0)
            } else {
                (1, 1)
            };
            src = (src << 1) | row_bit;
            dst = (dst << 1) | col_bit;
        }
        if src >= n || dst >= n {
            continue;
        }
        let key = (src as u32, dst as u32);
        if seen.insert(key) {
            edges.push(Edge::new(key.0, key.1));
        }
    }
    Graph::from_edges(n, edges)
}

/// Contiguous half-open vertex range `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub index: usize,
    pub lo: VertexId,
    pub hi: VertexId,
}

impl Interval {
    pub fn len(&self) -> usize {
        (self.hi - self.lo) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.lo <= v && v < self.hi
    }
}

/// Q intervals and the Q x Q shards between them. `shards[i][j]` holds the
/// edges whose source lies in interval `i` and destination in interval `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    q: usize,
    intervals: Vec<Interval>,
    shards: Vec<Vec<Vec<Edge>>>,
}

impl TileGrid {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn shard(&self, i: usize, j: usize) -> &[Edge] {
        &self.shards[i][j]
    }

    pub fn interval_of(&self, v: VertexId) -> usize {
        interval_index(v as usize, self.num_vertices(), self.q)
    }

    pub fn num_vertices(&self) -> usize {
        self.intervals.last().map_or(0, |iv| iv.hi as usize)
    }

    pub fn max_interval_len(&self) -> usize {
        self.intervals.iter().map(Interval::len).max().unwrap_or(0)
    }
}

/// Splits `[0, n)` into `q` contiguous intervals whose sizes differ by at most
/// one; the first `n % q` intervals get the extra vertex.
pub fn make_intervals(n: usize, q: usize) -> Result<Vec<Interval>> {
    if q == 0 {
        return Err(EngnError::InvalidArgument("q must be at least 1".into()));
    }
    if q > n {
        return Err(EngnError::InvalidArgument(format!(
            "q = {q} exceeds the vertex count {n}"
        )));
    }
    let base = n / q;
    let extra = n % q;
    let mut lo = 0usize;
    Ok((0..q)
        .map(|index| {
            let len = base + usize::from(index < extra);
            let iv = Interval {
                index,
                lo: lo as VertexId,
                hi: (lo + len) as VertexId,
            };
            lo += len;
            iv
        })
        .collect())
}

fn interval_index(v: usize, n: usize, q: usize) -> usize {
    let base = n / q;
    let extra = n % q;
    let split = extra * (base + 1);
    if v < split {
        v / (base + 1)
    } else {
        extra + (v - split) / base
    }
}

/// Grid partition of the edge list into Q^2 shards. Each shard keeps the
/// canonical edge order of the source graph.
pub fn grid_partition(g: &Graph, q: usize) -> Result<TileGrid> {
    partition_edges(g.num_vertices(), g.edges(), q)
}

/// Partitions an explicit canonical edge list (used when a layer augments the
/// graph, e.g. with self-loops).
pub fn partition_edges(n: usize, edges: &[Edge], q: usize) -> Result<TileGrid> {
    let intervals = make_intervals(n, q)?;
    let mut shards = vec![vec![Vec::new(); q]; q];
    for e in edges {
        let i = interval_index(e.src as usize, n, q);
        let j = interval_index(e.dst as usize, n, q);
        shards[i][j].push(*e);
    }
    Ok(TileGrid {
        q,
        intervals,
        shards,
    })
}
