use std::collections::{BTreeMap, HashMap, HashSet};

use crate::graph::VertexId;

/// Degree-aware vertex cache: a static region pinned to the highest
/// in-degree vertices plus an LRU region over the remaining lines. Lines are
/// tagged by destination vertex id.
#[derive(Debug, Clone)]
pub struct DavcState {
    static_set: HashSet<VertexId>,
    dynamic_capacity: usize,
    dynamic: HashMap<VertexId, u64>,
    recency: BTreeMap<u64, VertexId>,
    clock: u64,
    pub hits: u64,
    pub misses: u64,
}

/// The `k` vertices with the largest in-degree, ties broken by lower id.
pub fn top_by_degree(in_degree: &[u64], k: usize) -> Vec<VertexId> {
    let mut ids: Vec<VertexId> = (0..in_degree.len() as VertexId).collect();
    ids.sort_by_key(|&v| (std::cmp::Reverse(in_degree[v as usize]), v));
    ids.truncate(k);
    ids
}

impl DavcState {
    pub fn new(in_degree: &[u64], lines: usize, static_lines: usize) -> Self {
        let static_lines = static_lines.min(lines);
        let static_set: HashSet<VertexId> = top_by_degree(in_degree, static_lines).into_iter().collect();
        DavcState {
            dynamic_capacity: lines - static_set.len(),
            static_set,
            dynamic: HashMap::new(),
            recency: BTreeMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    pub fn static_set(&self) -> &HashSet<VertexId> {
        &self.static_set
    }

    pub fn dynamic_len(&self) -> usize {
        self.dynamic.len()
    }

    pub fn dynamic_capacity(&self) -> usize {
        self.dynamic_capacity
    }

    /// Returns true on a hit.
    pub fn access(&mut self, v: VertexId) -> bool {
        if self.static_set.contains(&v) {
            self.hits += 1;
            return true;
        }
        self.clock += 1;
        if let Some(stamp) = self.dynamic.get_mut(&v) {
            self.recency.remove(stamp);
            *stamp = self.clock;
            self.recency.insert(self.clock, v);
            self.hits += 1;
            return true;
        }
        self.misses += 1;
        if self.dynamic_capacity == 0 {
            return false;
        }
        if self.dynamic.len() == self.dynamic_capacity {
            if let Some((_, old)) = self.recency.pop_first() {
                self.dynamic.remove(&old);
            }
        }
        self.dynamic.insert(v, self.clock);
        self.recency.insert(self.clock, v);
        false
    }

    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}
