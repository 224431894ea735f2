//! Synthetic ground truth: battery discharge drives arc traversal times.

mod battery;
mod model;
mod sim;

use std::fmt;

use crate::ids::ArcId;

pub use battery::{soc_at, BatteryProfile};
pub use model::{true_traversal_time, CostModel, SpeedResponse};
pub use sim::{
    generate_reference_series, reference_truth, rng_for, run_mission, traverse_arc, AgvState,
    MissionClock, MissionOutcome, SimConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidConfig(String),
    /// State of charge fell to the halt threshold; the vehicle stops.
    Halted {
        time: f64,
        soc: f64,
    },
    UnknownArc(ArcId),
    InvalidPath(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidConfig(msg) => write!(f, "invalid simulation config: {msg}"),
            SimError::Halted { time, soc } => write!(
                f,
                "robot halted at battery time {time} s (state of charge {soc:.4})"
            ),
            SimError::UnknownArc(a) => write!(f, "no cost model for arc {a}"),
            SimError::InvalidPath(msg) => write!(f, "invalid path: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}
