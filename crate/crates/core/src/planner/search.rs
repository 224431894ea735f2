//! Minimum-cost simple paths with a deterministic tie-break: among equal-cost
//! paths the lexicographically smallest arc-id sequence wins.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::path::path_cost;
use super::{Path, PlanError};
use crate::ids::{ArcId, NodeId};
use crate::traffic_graph::{CostMap, TrafficGraph};

/// Candidate bound for reservation-aware planning.
pub const DEFAULT_K: usize = 32;

/// Every graph arc must carry a finite positive cost.
pub fn validate_costs(graph: &TrafficGraph, costs: &CostMap) -> Result<(), PlanError> {
    for arc in graph.arcs() {
        match costs.get(&arc.id) {
            None => return Err(PlanError::MissingCost(arc.id.clone())),
            Some(&c) if !(c > 0.0 && c.is_finite()) => {
                return Err(PlanError::NonPositiveCost {
                    arc: arc.id.clone(),
                    cost: c,
                })
            }
            Some(_) => {}
        }
    }
    Ok(())
}

fn check_node(graph: &TrafficGraph, n: &NodeId) -> Result<(), PlanError> {
    if graph.contains_node(n) {
        Ok(())
    } else {
        Err(PlanError::UnknownNode(n.clone()))
    }
}

/// Orders by (cost, arc sequence), reversed so `BinaryHeap` pops the smallest.
struct Label {
    cost: f64,
    arcs: Vec<ArcId>,
    node: NodeId,
}

fn key_cmp(a: (f64, &[ArcId]), b: (f64, &[ArcId])) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        key_cmp((other.cost, &other.arcs), (self.cost, &self.arcs))
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra over `graph` avoiding `banned_nodes` and `banned_arcs`.
fn restricted_search(
    graph: &TrafficGraph,
    costs: &CostMap,
    src: &NodeId,
    dst: &NodeId,
    banned_nodes: &BTreeSet<NodeId>,
    banned_arcs: &BTreeSet<ArcId>,
) -> Option<(f64, Vec<ArcId>)> {
    let mut best: BTreeMap<NodeId, (f64, Vec<ArcId>)> = BTreeMap::new();
    let mut settled: BTreeSet<NodeId> = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    best.insert(src.clone(), (0.0, Vec::new()));
    heap.push(Label {
        cost: 0.0,
        arcs: Vec::new(),
        node: src.clone(),
    });

    while let Some(Label { cost, arcs, node }) = heap.pop() {
        if !settled.insert(node.clone()) {
            continue;
        }
        if &node == dst {
            return Some((cost, arcs));
        }
        for arc in graph.outgoing(&node) {
            if banned_arcs.contains(&arc.id)
                || banned_nodes.contains(&arc.to)
                || settled.contains(&arc.to)
            {
                continue;
            }
            let next_cost = cost + costs[&arc.id];
            let mut next_arcs = arcs.clone();
            next_arcs.push(arc.id.clone());
            let improves = match best.get(&arc.to) {
                None => true,
                Some((c, seq)) => key_cmp((next_cost, &next_arcs), (*c, seq)) == Ordering::Less,
            };
            if improves {
                best.insert(arc.to.clone(), (next_cost, next_arcs.clone()));
                heap.push(Label {
                    cost: next_cost,
                    arcs: next_arcs,
                    node: arc.to.clone(),
                });
            }
        }
    }
    None
}

/// Minimum-cost simple path from `src` to `dst`.
pub fn shortest_path(
    graph: &TrafficGraph,
    costs: &CostMap,
    src: &NodeId,
    dst: &NodeId,
) -> Result<Path, PlanError> {
    check_node(graph, src)?;
    check_node(graph, dst)?;
    validate_costs(graph, costs)?;
    restricted_search(graph, costs, src, dst, &BTreeSet::new(), &BTreeSet::new())
        .map(|(_, arcs)| Path::from_arcs_unchecked(arcs))
        .ok_or_else(|| PlanError::Unreachable {
            src: src.clone(),
            dst: dst.clone(),
        })
}

/// Up to `k` loopless paths in increasing (cost, arc sequence) order (Yen).
pub fn k_shortest_paths(
    graph: &TrafficGraph,
    costs: &CostMap,
    src: &NodeId,
    dst: &NodeId,
    k: usize,
) -> Result<Vec<(f64, Path)>, PlanError> {
    let first = shortest_path(graph, costs, src, dst)?;
    let mut accepted: Vec<(f64, Vec<ArcId>)> =
        vec![(path_cost(costs, first.arcs())?, first.arcs().to_vec())];
    let mut candidates: Vec<(f64, Vec<ArcId>)> = Vec::new();

    while accepted.len() < k {
        let prev = accepted.last().expect("non-empty").1.clone();
        let nodes = Path::from_arcs_unchecked(prev.clone()).nodes(graph, src);
        for j in 0..prev.len() {
            let spur = &nodes[j];
            let root = &prev[..j];
            let banned_arcs: BTreeSet<ArcId> = accepted
                .iter()
                .filter(|(_, p)| p.len() > j && &p[..j] == root)
                .map(|(_, p)| p[j].clone())
                .collect();
            let banned_nodes: BTreeSet<NodeId> = nodes[..j].iter().cloned().collect();
            if let Some((_, spur_arcs)) =
                restricted_search(graph, costs, spur, dst, &banned_nodes, &banned_arcs)
            {
                let mut total = root.to_vec();
                total.extend(spur_arcs);
                let already = accepted
                    .iter()
                    .chain(candidates.iter())
                    .any(|(_, p)| p == &total);
                if !already {
                    candidates.push((path_cost(costs, &total)?, total));
                }
            }
        }
        let Some(pos) = candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| key_cmp((a.0, &a.1), (b.0, &b.1)))
            .map(|(i, _)| i)
        else {
            break;
        };
        accepted.push(candidates.swap_remove(pos));
    }

    Ok(accepted
        .into_iter()
        .map(|(c, arcs)| (c, Path::from_arcs_unchecked(arcs)))
        .collect())
}
