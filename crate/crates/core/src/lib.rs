//! Online estimation of time-varying arc traversal times for AGVs.
//!
//! - [`estimators`]: moving-window least squares, recursive least squares with
//!   constant or adaptive forgetting, and a scalar Kalman filter.
//! - [`traffic_graph`]: the directed floor graph and per-arc estimator banks.
//! - [`agv_sim`]: battery-driven synthetic traversal times.
//! - [`planner`]: shortest paths over estimated costs with arc reservations.
//! - [`harness`]: configuration, CSV I/O and the CLI commands.

pub mod agv_sim;
pub mod estimators;
pub mod harness;
pub mod ids;
pub mod observation;
pub mod planner;
pub mod traffic_graph;

pub use ids::{AgvId, ArcId, NodeId};
pub use observation::TraversalObservation;
