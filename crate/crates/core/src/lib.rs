//! Functional and cycle-level model of an edge-centric GNN accelerator: a
//! PE array that runs feature extraction, a ring-edge-reduce aggregate
//! stage and an update stage over a grid of graph tiles.

pub mod dataflow;
pub mod error;
pub mod fixed;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod scalar;
pub mod schedule;
pub mod sim;

pub use error::{EngnError, Result};
pub use fixed::Fixed32;
pub use graph::{Edge, Graph, TileGrid, VertexId};
pub use matrix::{Matrix, PropertyMatrix};
pub use model::{forward_layer, Aggregator, LayerSpec, ModelKind, WeightSet};
pub use scalar::Scalar;
pub use schedule::{dasr_decide, StageOrder, TileMajor};
