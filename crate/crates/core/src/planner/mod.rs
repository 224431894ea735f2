//! Shortest paths over estimated arc costs, with whole-arc reservations
//! between AGVs.

mod error;
mod path;
mod reservations;
mod search;

pub use error::PlanError;
pub use path::{Path, Plan};
pub use reservations::{
    detect_conflict, overlap, plan_with_reservations, plan_with_reservations_k, remaining_path,
    replan_on_update, Reservation, ReservationTable,
};
pub use search::{k_shortest_paths, shortest_path, validate_costs, DEFAULT_K};
