//! Cycle and traffic simulation of whole layers on the tiled graph.

mod config;
mod davc;
mod engine;
mod report;

pub use config::{SimConfig, CONFIG_KEYS};
pub use davc::{top_by_degree, DavcState};
pub use engine::{
    default_q, simulate_layer, stage_costs, Plan, SimOutput, SimStats, StageCosts, TraceEvent, TraceKind,
};
pub use report::*;
