//! Directed transportation-floor graph with per-arc cost-parameter banks.

mod bank;
mod graph;

pub use bank::{cost_snapshot, ArcCostBank, BankError, CostBanks, CostMap, MIN_COST};
pub use graph::{load_graph, Arc, ArcKind, GraphError, TrafficGraph};
