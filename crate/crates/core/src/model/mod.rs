//! Functional semantics of the three-stage (feature extraction, aggregate,
//! update) processing model for the five supported GNN layer kinds.

mod gru;
mod layer;
mod oracle;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{EngnError, Result};

pub use gru::{gru_cell, GruWeights};
pub use layer::{
    aggregate, feature_extraction, forward_layer, gcn_edge_norm, layer_edges, update,
    validate_order, LayerEdges, Messages,
};
pub use oracle::{dense_oracle, ORACLE_MAX_VERTICES};
pub use weights::{load_weight_matrix, save_weight_matrix_binary, WeightSet, WEIGHT_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    GsPool,
    Rgcn,
    GatedGcn,
    Grn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Gcn,
        ModelKind::GsPool,
        ModelKind::Rgcn,
        ModelKind::GatedGcn,
        ModelKind::Grn,
    ];

    /// Default aggregator of each kind.
    pub fn default_aggregator(self) -> Aggregator {
        match self {
            ModelKind::GsPool => Aggregator::Max,
            _ => Aggregator::Sum,
        }
    }

    pub fn allows_aggregator(self, agg: Aggregator) -> bool {
        match self {
            ModelKind::GsPool => matches!(agg, Aggregator::Max | Aggregator::Mean),
            _ => agg == Aggregator::Sum,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gcn => "gcn",
            ModelKind::GsPool => "gs-pool",
            ModelKind::Rgcn => "rgcn",
            ModelKind::GatedGcn => "gated-gcn",
            ModelKind::Grn => "grn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = EngnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "gcn" => Ok(ModelKind::Gcn),
            "gs-pool" | "gspool" | "graphsage" => Ok(ModelKind::GsPool),
            "rgcn" | "r-gcn" => Ok(ModelKind::Rgcn),
            "gated-gcn" | "gatedgcn" => Ok(ModelKind::GatedGcn),
            "grn" => Ok(ModelKind::Grn),
            other => Err(EngnError::InvalidArgument(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Sum,
    Max,
    /// Sum followed by division by the in-degree; degree 0 gives 0.
    Mean,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Sum => "sum",
            Aggregator::Max => "max",
            Aggregator::Mean => "mean",
        })
    }
}

impl FromStr for Aggregator {
    type Err = EngnError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(Aggregator::Sum),
            "max" => Ok(Aggregator::Max),
            "mean" | "avg" => Ok(Aggregator::Mean),
            other => Err(EngnError::InvalidArgument(format!("unknown aggregator {other:?}"))),
        }
    }
}

/// One GNN layer: input dim `f`, output dim `h`, aggregator and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    f: usize,
    h: usize,
    aggregator: Aggregator,
    weights: WeightSet<f64>,
}

impl LayerSpec {
    pub fn new(f: usize, h: usize, aggregator: Aggregator, weights: WeightSet<f64>) -> Result<Self> {
        if f == 0 || h == 0 {
            return Err(EngnError::InvalidArgument(format!(
                "layer dims must be positive, got {f}:{h}"
            )));
        }
        let kind = weights.kind();
        if !kind.allows_aggregator(aggregator) {
            return Err(EngnError::InvalidArgument(format!(
                "{kind} does not support the {aggregator} aggregator"
            )));
        }
        weights.check_dims(f, h)?;
        Ok(LayerSpec {
            f,
            h,
            aggregator,
            weights,
        })
    }

    /// Layer with seeded random weights and the kind's default aggregator.
    pub fn random(kind: ModelKind, f: usize, h: usize, num_relations: usize, seed: u64) -> Result<Self> {
        let weights = WeightSet::random(kind, f, h, num_relations, seed)?;
        LayerSpec::new(f, h, kind.default_aggregator(), weights)
    }

    pub fn kind(&self) -> ModelKind {
        self.weights.kind()
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn aggregator(&self) -> Aggregator {
        self.aggregator
    }

    pub fn weights(&self) -> &WeightSet<f64> {
        &self.weights
    }

    pub fn num_relations(&self) -> usize {
        self.weights.num_relations()
    }

    pub fn with_aggregator(mut self, aggregator: Aggregator) -> Result<Self> {
        if !self.kind().allows_aggregator(aggregator) {
            return Err(EngnError::InvalidArgument(format!(
                "{} does not support the {aggregator} aggregator",
                self.kind()
            )));
        }
        self.aggregator = aggregator;
        Ok(self)
    }
}
