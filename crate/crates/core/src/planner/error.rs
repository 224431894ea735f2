use std::fmt;

use crate::ids::{ArcId, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    UnknownNode(NodeId),
    UnknownArc(ArcId),
    MissingCost(ArcId),
    NonPositiveCost {
        arc: ArcId,
        cost: f64,
    },
    Unreachable {
        src: NodeId,
        dst: NodeId,
    },
    NoConflictFreePath {
        src: NodeId,
        dst: NodeId,
        candidates: usize,
    },
    InvalidPath(String),
    InvalidProgress {
        completed: usize,
        len: usize,
    },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::UnknownNode(n) => write!(f, "node {n} is not in the graph"),
            PlanError::UnknownArc(a) => write!(f, "arc {a} is not in the graph"),
            PlanError::MissingCost(a) => write!(f, "no cost for arc {a}"),
            PlanError::NonPositiveCost { arc, cost } => {
                write!(f, "cost {cost} of arc {arc} is not positive")
            }
            PlanError::Unreachable { src, dst } => write!(f, "{dst} is unreachable from {src}"),
            PlanError::NoConflictFreePath {
                src,
                dst,
                candidates,
            } => write!(
                f,
                "no conflict-free path from {src} to {dst} among {candidates} candidate(s)"
            ),
            PlanError::InvalidPath(msg) => write!(f, "invalid path: {msg}"),
            PlanError::InvalidProgress { completed, len } => {
                write!(f, "{completed} completed arcs exceed the plan length {len}")
            }
        }
    }
}

impl std::error::Error for PlanError {}
