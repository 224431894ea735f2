use std::collections::BTreeSet;

use super::PlanError;
use crate::ids::{AgvId, ArcId, NodeId};
use crate::traffic_graph::{CostMap, TrafficGraph};

/// Contiguous, simple sequence of arcs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path {
    arcs: Vec<ArcId>,
}

impl Path {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Checks contiguity and that no node is visited twice.
    pub fn new(graph: &TrafficGraph, arcs: Vec<ArcId>) -> Result<Self, PlanError> {
        let mut visited = BTreeSet::new();
        let mut prev: Option<&NodeId> = None;
        for id in &arcs {
            let arc = graph
                .arc(id)
                .ok_or_else(|| PlanError::UnknownArc(id.clone()))?;
            match prev {
                None => {
                    visited.insert(&arc.from);
                }
                Some(p) if p != &arc.from => {
                    return Err(PlanError::InvalidPath(format!(
                        "arc {id} does not start at {p}"
                    )))
                }
                Some(_) => {}
            }
            if !visited.insert(&arc.to) {
                return Err(PlanError::InvalidPath(format!(
                    "node {} visited twice",
                    arc.to
                )));
            }
            prev = Some(&arc.to);
        }
        Ok(Self { arcs })
    }

    pub(crate) fn from_arcs_unchecked(arcs: Vec<ArcId>) -> Self {
        Self { arcs }
    }

    pub fn arcs(&self) -> &[ArcId] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Node sequence starting at `src`.
    pub fn nodes(&self, graph: &TrafficGraph, src: &NodeId) -> Vec<NodeId> {
        let mut out = vec![src.clone()];
        out.extend(
            self.arcs
                .iter()
                .filter_map(|a| graph.arc(a).map(|a| a.to.clone())),
        );
        out
    }

    /// Total cost summed in path order.
    pub fn cost(&self, costs: &CostMap) -> Result<f64, PlanError> {
        path_cost(costs, &self.arcs)
    }
}

pub(crate) fn path_cost(costs: &CostMap, arcs: &[ArcId]) -> Result<f64, PlanError> {
    arcs.iter().try_fold(0.0, |acc, a| {
        costs
            .get(a)
            .map(|c| acc + c)
            .ok_or_else(|| PlanError::MissingCost(a.clone()))
    })
}

/// A path with the occupancy interval of every arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub agv: AgvId,
    pub src: NodeId,
    pub dst: NodeId,
    pub path: Path,
    /// (entry, exit) per arc, seconds.
    pub intervals: Vec<(f64, f64)>,
}

impl Plan {
    /// Lays `path` out in time from `depart` using `costs`.
    pub fn schedule(
        agv: AgvId,
        src: NodeId,
        dst: NodeId,
        path: Path,
        costs: &CostMap,
        depart: f64,
    ) -> Result<Self, PlanError> {
        let mut intervals = Vec::with_capacity(path.len());
        let mut entry = depart;
        for a in path.arcs() {
            let c = *costs
                .get(a)
                .ok_or_else(|| PlanError::MissingCost(a.clone()))?;
            let exit = entry + c;
            intervals.push((entry, exit));
            entry = exit;
        }
        Ok(Self {
            agv,
            src,
            dst,
            path,
            intervals,
        })
    }

    pub fn depart(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn arrival(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// Planned duration of the `i`-th arc.
    pub fn planned_duration(&self, i: usize) -> f64 {
        let (entry, exit) = self.intervals[i];
        exit - entry
    }

    pub fn occupancy(&self) -> impl Iterator<Item = (&ArcId, (f64, f64))> {
        self.path.arcs().iter().zip(self.intervals.iter().copied())
    }
}
