use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{HarnessError, ScenarioConfig};
use crate::agv_sim::{
    rng_for, traverse_arc, true_traversal_time, AgvState, MissionClock, SimError,
};
use crate::ids::{ArcId, NodeId};
use crate::observation::TraversalObservation;
use crate::planner::{
    plan_with_reservations, remaining_path, replan_on_update, Path, Plan, PlanError, Reservation,
    ReservationTable,
};
use crate::traffic_graph::{CostBanks, TrafficGraph};

pub const MISSION_HEADER: &str = "leg,step,agv,arc,from,to,entry,planned,actual,replanned";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryAge {
    /// Fresh charge at mission start.
    New,
    /// `mission.drained_fraction` of battery life already used.
    Drained,
}

impl fmt::Display for BatteryAge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatteryAge::New => "new",
            BatteryAge::Drained => "drained",
        })
    }
}

impl FromStr for BatteryAge {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "new" => Ok(BatteryAge::New),
            "drained" => Ok(BatteryAge::Drained),
            _ => Err(HarnessError::Input(format!(
                "battery age '{s}' must be new or drained"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionRow {
    pub leg: usize,
    pub step: usize,
    pub arc: ArcId,
    pub from: NodeId,
    pub to: NodeId,
    pub entry: f64,
    pub planned: f64,
    pub actual: f64,
    /// The route ahead changed at the node this arc leads to.
    pub replanned: bool,
}

/// A newly admitted route: the first plan of a leg or a change at a node.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteChange {
    pub leg: usize,
    pub time: f64,
    pub plan: Plan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionReport {
    pub agv: crate::ids::AgvId,
    pub rows: Vec<MissionRow>,
    pub routes: Vec<RouteChange>,
    /// Reservations of other AGVs, one single-arc plan each.
    pub others: Vec<Plan>,
    pub halted: Option<SimError>,
}

impl MissionReport {
    /// Arcs of the first route admitted on `leg`.
    pub fn initial_route(&self, leg: usize) -> Option<&[ArcId]> {
        self.routes
            .iter()
            .find(|r| r.leg == leg)
            .map(|r| r.plan.path.arcs())
    }

    /// Arcs actually traversed, in order.
    pub fn traversed(&self) -> Vec<&ArcId> {
        self.rows.iter().map(|r| &r.arc).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MISSION_HEADER}");
        // Route comments precede the first row entered after they were admitted.
        let mut pending: Vec<&RouteChange> = self.routes.iter().collect();
        pending.reverse();
        for row in &self.rows {
            while let Some(r) = pending.last() {
                if (r.leg, r.time) <= (row.leg, row.entry) {
                    write_route(&mut s, r);
                    pending.pop();
                } else {
                    break;
                }
            }
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                row.leg,
                row.step,
                self.agv,
                row.arc,
                row.from,
                row.to,
                row.entry,
                row.planned,
                row.actual,
                u8::from(row.replanned)
            );
        }
        while let Some(r) = pending.pop() {
            write_route(&mut s, r);
        }
        if let Some(e) = &self.halted {
            let _ = writeln!(s, "# halted {e}");
        }
        s
    }
}

fn write_route(s: &mut String, r: &RouteChange) {
    let arcs: Vec<&str> = r.plan.path.arcs().iter().map(ArcId::as_str).collect();
    let _ = writeln!(
        s,
        "# route leg={} t={} from={} to={} eta={} arcs={}",
        r.leg,
        r.time,
        r.plan.src,
        r.plan.dst,
        r.plan.arrival().unwrap_or(r.time),
        arcs.join(" ")
    );
}

fn plan_error(e: PlanError) -> HarnessError {
    match e {
        PlanError::NoConflictFreePath { .. } => HarnessError::Aborted(e.to_string()),
        other => HarnessError::Input(other.to_string()),
    }
}

/// Runs the closed loop plan → traverse → record → replan between `src` and
/// `dst`, alternating direction for `mission.legs` legs.
///
/// Before the mission, every arc bank sees `mission.warmup_samples`
/// traversals sampled at the same battery age as the mission vehicle, spaced
/// `mission.warmup_interval` seconds apart and ending at mission start.
pub fn run_mission_scenario(
    cfg: &ScenarioConfig,
    graph: &TrafficGraph,
    src: &NodeId,
    dst: &NodeId,
    age: BatteryAge,
) -> Result<MissionReport, HarnessError> {
    for n in [src, dst] {
        if !graph.contains_node(n) {
            return Err(HarnessError::Input(format!("node {n} is not in the graph")));
        }
    }
    let sim = cfg.sim_config(graph)?;
    let m = &cfg.mission;
    let offset = match age {
        BatteryAge::New => 0.0,
        BatteryAge::Drained => m.drained_fraction * cfg.t_empty,
    };
    if !(m.warmup_interval >= 0.0 && offset.is_finite() && offset >= 0.0) {
        return Err(HarnessError::Input(
            "mission warm-up interval and battery offset must be non-negative".into(),
        ));
    }
    let agv = AgvState::new(m.agv.clone(), offset);
    let spec = cfg.estimator.spec(cfg.bank_method)?;
    let mut banks = CostBanks::new(spec, cfg.v_max, cfg.bank_per_agv)
        .map_err(|e| HarnessError::Input(e.to_string()))?;

    for arc in graph.arcs() {
        let model = sim
            .model(&arc.id)
            .map_err(|e| HarnessError::Internal(e.to_string()))?;
        let mut rng = rng_for(cfg.seed, &format!("warmup/{}/{}", m.agv, arc.id));
        for k in (1..=m.warmup_samples).rev() {
            let t = (offset - k as f64 * m.warmup_interval).max(0.0);
            let d = true_traversal_time(model, &sim.battery, t, &mut rng)
                .map_err(|e| HarnessError::Aborted(format!("during warm-up: {e}")))?;
            let obs = TraversalObservation {
                arc: arc.id.clone(),
                agv: m.agv.clone(),
                start_time: t - offset,
                duration: d,
            };
            banks
                .record(graph, &obs)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
        }
    }

    let mut table = ReservationTable::new();
    let mut others = Vec::new();
    for (label, r) in &cfg.reservations {
        let arc = graph.arc(&r.arc).ok_or_else(|| {
            HarnessError::Input(format!("reservation {label} names unknown arc {}", r.arc))
        })?;
        if r.agv == m.agv {
            return Err(HarnessError::Input(format!(
                "reservation {label} belongs to the mission vehicle {}",
                r.agv
            )));
        }
        table
            .reserve(
                r.arc.clone(),
                Reservation {
                    agv: r.agv.clone(),
                    entry: r.entry,
                    exit: r.exit,
                },
            )
            .map_err(|(arc, _)| {
                HarnessError::Input(format!("reservation {label} overlaps another on {arc}"))
            })?;
        others.push(Plan {
            agv: r.agv.clone(),
            src: arc.from.clone(),
            dst: arc.to.clone(),
            path: Path::from_arcs_unchecked(vec![r.arc.clone()]),
            intervals: vec![(r.entry, r.exit)],
        });
    }

    let mut rng = rng_for(cfg.seed, &format!("mission/{}", m.agv));
    let mut clock = MissionClock::new(0.0);
    let mut rows = Vec::new();
    let mut routes = Vec::new();
    let mut halted = None;

    'legs: for leg in 0..m.legs {
        let (from, to) = if leg % 2 == 0 { (src, dst) } else { (dst, src) };
        let costs = banks.snapshot(graph, &m.agv);
        let mut plan =
            plan_with_reservations(graph, &costs, &mut table, &m.agv, from, to, clock.now())
                .map_err(plan_error)?;
        routes.push(RouteChange {
            leg,
            time: clock.now(),
            plan: plan.clone(),
        });
        let mut idx = 0;
        let mut step = 0;
        while idx < plan.path.len() {
            let arc_id = plan.path.arcs()[idx].clone();
            let arc = graph
                .arc(&arc_id)
                .ok_or_else(|| HarnessError::Internal(format!("planned unknown arc {arc_id}")))?;
            let planned = plan.planned_duration(idx);
            let entry = clock.now();
            let obs = match traverse_arc(&sim, &agv, &arc_id, &mut clock, &mut rng) {
                Ok(o) => o,
                Err(e @ SimError::Halted { .. }) => {
                    halted = Some(e);
                    break 'legs;
                }
                Err(e) => return Err(HarnessError::Internal(e.to_string())),
            };
            banks
                .record(graph, &obs)
                .map_err(|e| HarnessError::Internal(e.to_string()))?;
            idx += 1;
            let mut replanned = false;
            if idx < plan.path.len() {
                let costs = banks.snapshot(graph, &m.agv);
                match replan_on_update(graph, &plan, idx, clock.now(), &costs, &mut table) {
                    Ok(next) => {
                        replanned = next.path != remaining_path(&plan, idx);
                        plan = next;
                        idx = 0;
                        if replanned {
                            routes.push(RouteChange {
                                leg,
                                time: clock.now(),
                                plan: plan.clone(),
                            });
                        }
                    }
                    // keep following the current route; its reservations were restored
                    Err(PlanError::NoConflictFreePath { .. }) => {}
                    Err(e) => return Err(HarnessError::Internal(e.to_string())),
                }
            }
            rows.push(MissionRow {
                leg,
                step,
                arc: arc_id,
                from: arc.from.clone(),
                to: arc.to.clone(),
                entry,
                planned,
                actual: obs.duration,
                replanned,
            });
            step += 1;
        }
    }

    Ok(MissionReport {
        agv: m.agv.clone(),
        rows,
        routes,
        others,
        halted,
    })
}
