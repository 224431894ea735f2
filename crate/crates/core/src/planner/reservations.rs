use std::collections::BTreeMap;

use super::search::{k_shortest_paths, validate_costs, DEFAULT_K};
use super::{Path, Plan, PlanError};
use crate::ids::{AgvId, ArcId, NodeId};
use crate::traffic_graph::{CostMap, TrafficGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct Reservation {
    pub agv: AgvId,
    pub entry: f64,
    pub exit: f64,
}

/// Overlap of two occupancy intervals, if it has positive length.
/// Intervals that only touch at an endpoint do not overlap.
pub fn overlap(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo < hi).then_some((lo, hi))
}

/// Every arc both plans use during overlapping intervals, in `plan_a` order.
pub fn detect_conflict(plan_a: &Plan, plan_b: &Plan) -> Vec<(ArcId, (f64, f64))> {
    let mut out = Vec::new();
    for (arc, ia) in plan_a.occupancy() {
        for (other, ib) in plan_b.occupancy() {
            if arc == other {
                if let Some(o) = overlap(ia, ib) {
                    out.push((arc.clone(), o));
                }
            }
        }
    }
    out
}

/// Per-arc ledger of exclusive occupancy. Single writer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReservationTable {
    arcs: BTreeMap<ArcId, Vec<Reservation>>,
}

impl ReservationTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reservations(&self, arc: &ArcId) -> &[Reservation] {
        self.arcs.get(arc).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArcId, &Reservation)> {
        self.arcs
            .iter()
            .flat_map(|(a, rs)| rs.iter().map(move |r| (a, r)))
    }

    pub fn len(&self) -> usize {
        self.arcs.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Overlaps between `plan` and reservations held by other AGVs.
    pub fn conflicts(&self, plan: &Plan) -> Vec<(ArcId, (f64, f64))> {
        let mut out = Vec::new();
        for (arc, interval) in plan.occupancy() {
            for r in self.reservations(arc) {
                if r.agv == plan.agv {
                    continue;
                }
                if let Some(o) = overlap(interval, (r.entry, r.exit)) {
                    out.push((arc.clone(), o));
                }
            }
        }
        out
    }

    /// Adds a single reservation if it does not overlap another AGV's.
    pub fn reserve(&mut self, arc: ArcId, r: Reservation) -> Result<(), (ArcId, (f64, f64))> {
        for other in self.reservations(&arc) {
            if other.agv != r.agv {
                if let Some(o) = overlap((r.entry, r.exit), (other.entry, other.exit)) {
                    return Err((arc, o));
                }
            }
        }
        self.arcs.entry(arc).or_default().push(r);
        Ok(())
    }

    fn insert_plan(&mut self, plan: &Plan) {
        for (arc, (entry, exit)) in plan.occupancy() {
            self.arcs.entry(arc.clone()).or_default().push(Reservation {
                agv: plan.agv.clone(),
                entry,
                exit,
            });
        }
    }

    /// Removes the reservations `plan` holds for its arcs from index `from` on.
    pub fn release_suffix(&mut self, plan: &Plan, from: usize) -> Vec<(ArcId, Reservation)> {
        let mut released = Vec::new();
        for (arc, (entry, exit)) in plan.occupancy().skip(from) {
            if let Some(rs) = self.arcs.get_mut(arc) {
                if let Some(pos) = rs
                    .iter()
                    .position(|r| r.agv == plan.agv && r.entry == entry && r.exit == exit)
                {
                    released.push((arc.clone(), rs.remove(pos)));
                }
                if rs.is_empty() {
                    self.arcs.remove(arc);
                }
            }
        }
        released
    }

    /// True when no two AGVs hold overlapping intervals on any arc.
    pub fn is_consistent(&self) -> bool {
        self.arcs.values().all(|rs| {
            rs.iter().enumerate().all(|(i, a)| {
                rs[i + 1..].iter().all(|b| {
                    a.agv == b.agv || overlap((a.entry, a.exit), (b.entry, b.exit)).is_none()
                })
            })
        })
    }
}

/// Admits the cheapest of up to [`DEFAULT_K`] candidate paths whose occupancy
/// does not overlap reservations of other AGVs, and records it in `table`.
pub fn plan_with_reservations(
    graph: &TrafficGraph,
    costs: &CostMap,
    table: &mut ReservationTable,
    agv: &AgvId,
    src: &NodeId,
    dst: &NodeId,
    depart: f64,
) -> Result<Plan, PlanError> {
    plan_with_reservations_k(graph, costs, table, agv, src, dst, depart, DEFAULT_K)
}

#[allow(clippy::too_many_arguments)]
pub fn plan_with_reservations_k(
    graph: &TrafficGraph,
    costs: &CostMap,
    table: &mut ReservationTable,
    agv: &AgvId,
    src: &NodeId,
    dst: &NodeId,
    depart: f64,
    k: usize,
) -> Result<Plan, PlanError> {
    validate_costs(graph, costs)?;
    let candidates = k_shortest_paths(graph, costs, src, dst, k)?;
    let n = candidates.len();
    for (_, path) in candidates {
        let plan = Plan::schedule(agv.clone(), src.clone(), dst.clone(), path, costs, depart)?;
        if table.conflicts(&plan).is_empty() {
            table.insert_plan(&plan);
            return Ok(plan);
        }
    }
    Err(PlanError::NoConflictFreePath {
        src: src.clone(),
        dst: dst.clone(),
        candidates: n,
    })
}

/// Re-plans the remainder of `plan` after `completed` arcs, from the node the
/// AGV has reached, departing at `now`. The old suffix reservations are
/// released; on failure they are restored and the table is left unchanged.
pub fn replan_on_update(
    graph: &TrafficGraph,
    plan: &Plan,
    completed: usize,
    now: f64,
    new_costs: &CostMap,
    table: &mut ReservationTable,
) -> Result<Plan, PlanError> {
    if completed > plan.path.len() {
        return Err(PlanError::InvalidProgress {
            completed,
            len: plan.path.len(),
        });
    }
    let current = if completed == 0 {
        plan.src.clone()
    } else {
        let arc = &plan.path.arcs()[completed - 1];
        graph
            .arc(arc)
            .ok_or_else(|| PlanError::UnknownArc(arc.clone()))?
            .to
            .clone()
    };
    let released = table.release_suffix(plan, completed);
    match plan_with_reservations(graph, new_costs, table, &plan.agv, &current, &plan.dst, now) {
        Ok(p) => Ok(p),
        Err(e) => {
            for (arc, r) in released {
                table.arcs.entry(arc).or_default().push(r);
            }
            Err(e)
        }
    }
}

/// Remaining arcs of `plan` after `completed`, as a path.
pub fn remaining_path(plan: &Plan, completed: usize) -> Path {
    Path::from_arcs_unchecked(plan.path.arcs()[completed.min(plan.path.len())..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::shortest_path;
    use crate::traffic_graph::load_graph;

    fn floor() -> TrafficGraph {
        load_graph(include_str!("../../data/floor.graph")).unwrap()
    }

    fn unit_costs(g: &TrafficGraph, scale: f64) -> CostMap {
        g.arcs().map(|a| (a.id.clone(), a.length * scale)).collect()
    }

    fn plan_on(arcs: &[(&str, f64, f64)], agv: &str) -> Plan {
        Plan {
            agv: agv.into(),
            src: "s".into(),
            dst: "t".into(),
            path: Path::from_arcs_unchecked(arcs.iter().map(|a| ArcId::from(a.0)).collect()),
            intervals: arcs.iter().map(|a| (a.1, a.2)).collect(),
        }
    }

    #[test]
    fn identical_plans_conflict_everywhere() {
        let p = plan_on(&[("x", 0.0, 2.0), ("y", 2.0, 5.0)], "a");
        let c = detect_conflict(&p, &p);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn disjoint_windows_do_not_conflict() {
        let a = plan_on(&[("x", 0.0, 2.0)], "a");
        let b = plan_on(&[("x", 3.0, 6.0)], "b");
        assert!(detect_conflict(&a, &b).is_empty());
    }

    #[test]
    fn partial_overlap() {
        let a = plan_on(&[("x", 0.0, 5.0)], "a");
        let b = plan_on(&[("x", 4.0, 9.0)], "b");
        assert_eq!(
            detect_conflict(&a, &b),
            vec![(ArcId::from("x"), (4.0, 5.0))]
        );
    }

    #[test]
    fn touching_is_not_conflict() {
        let a = plan_on(&[("x", 0.0, 5.0)], "a");
        let b = plan_on(&[("x", 5.0, 9.0)], "b");
        assert!(detect_conflict(&a, &b).is_empty());
    }

    #[test]
    fn empty_table_matches_shortest_path() {
        let g = floor();
        let c = unit_costs(&g, 2.0);
        let mut table = ReservationTable::new();
        let plan = plan_with_reservations(
            &g,
            &c,
            &mut table,
            &"agv".into(),
            &"n1".into(),
            &"n6".into(),
            3.0,
        )
        .unwrap();
        let sp = shortest_path(&g, &c, &"n1".into(), &"n6".into()).unwrap();
        assert_eq!(plan.path, sp);
        assert_eq!(plan.depart(), Some(3.0));
        assert_eq!(plan.arrival(), Some(3.0 + sp.cost(&c).unwrap()));
        assert_eq!(table.len(), sp.len());
    }

    #[test]
    fn reserved_arc_forces_detour() {
        let g = floor();
        let c = unit_costs(&g, 2.0);
        let mut table = ReservationTable::new();
        table
            .reserve(
                "a23".into(),
                Reservation {
                    agv: "agv1".into(),
                    entry: 5.0,
                    exit: 15.0,
                },
            )
            .unwrap();
        let plan = plan_with_reservations(
            &g,
            &c,
            &mut table,
            &"agv2".into(),
            &"n1".into(),
            &"n3".into(),
            0.0,
        )
        .unwrap();
        assert_eq!(
            plan.path
                .arcs()
                .iter()
                .map(ArcId::as_str)
                .collect::<Vec<_>>(),
            vec!["a12", "a25", "a56", "a63"]
        );
        assert!(table.is_consistent());
    }

    #[test]
    fn fully_blocked_reports_failure() {
        let g = load_graph("node n1\nnode n2\narc a n1 n2 1\n").unwrap();
        let c: CostMap = [(ArcId::from("a"), 2.0)].into_iter().collect();
        let mut table = ReservationTable::new();
        table
            .reserve(
                "a".into(),
                Reservation {
                    agv: "other".into(),
                    entry: 0.0,
                    exit: 100.0,
                },
            )
            .unwrap();
        let before = table.clone();
        let err = plan_with_reservations(
            &g,
            &c,
            &mut table,
            &"me".into(),
            &"n1".into(),
            &"n2".into(),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, PlanError::NoConflictFreePath { .. }));
        assert_eq!(table, before);
    }

    #[test]
    fn overlapping_reservation_rejected() {
        let mut table = ReservationTable::new();
        table
            .reserve(
                "x".into(),
                Reservation {
                    agv: "a".into(),
                    entry: 0.0,
                    exit: 5.0,
                },
            )
            .unwrap();
        assert!(table
            .reserve(
                "x".into(),
                Reservation {
                    agv: "b".into(),
                    entry: 4.0,
                    exit: 6.0
                }
            )
            .is_err());
        assert!(table
            .reserve(
                "x".into(),
                Reservation {
                    agv: "b".into(),
                    entry: 5.0,
                    exit: 6.0
                }
            )
            .is_ok());
    }

    #[test]
    fn replan_with_same_costs_keeps_remaining_route() {
        let g = floor();
        let c = unit_costs(&g, 2.0);
        let mut table = ReservationTable::new();
        let agv = AgvId::from("agv");
        let plan =
            plan_with_reservations(&g, &c, &mut table, &agv, &"n1".into(), &"n6".into(), 0.0)
                .unwrap();
        let now = plan.intervals[0].1;
        let next = replan_on_update(&g, &plan, 1, now, &c, &mut table).unwrap();
        assert_eq!(next.path, remaining_path(&plan, 1));
        assert_eq!(next.intervals, plan.intervals[1..].to_vec());
        assert_eq!(table.len(), plan.path.len());
    }

    #[test]
    fn replan_switches_when_arc_gets_expensive() {
        let g = floor();
        let mut c = unit_costs(&g, 1.0);
        let mut table = ReservationTable::new();
        let agv = AgvId::from("agv");
        let plan =
            plan_with_reservations(&g, &c, &mut table, &agv, &"n1".into(), &"n3".into(), 0.0)
                .unwrap();
        assert_eq!(plan.path.arcs()[1].as_str(), "a23");
        // a23 at 4 → 12 makes n2→n5→n6→n3 (3+4+3 = 10) cheaper
        c.insert("a23".into(), 12.0);
        let next = replan_on_update(&g, &plan, 1, 4.0, &c, &mut table).unwrap();
        assert_eq!(
            next.path
                .arcs()
                .iter()
                .map(ArcId::as_str)
                .collect::<Vec<_>>(),
            vec!["a25", "a56", "a63"]
        );
        assert!(table.reservations(&"a23".into()).is_empty());
    }

    #[test]
    fn replan_progress_checked() {
        let g = floor();
        let c = unit_costs(&g, 1.0);
        let mut table = ReservationTable::new();
        let plan = plan_with_reservations(
            &g,
            &c,
            &mut table,
            &"agv".into(),
            &"n1".into(),
            &"n3".into(),
            0.0,
        )
        .unwrap();
        assert!(matches!(
            replan_on_update(&g, &plan, 5, 0.0, &c, &mut table),
            Err(PlanError::InvalidProgress { .. })
        ));
    }
}
