//! Per-arc estimator banks and the cost snapshot handed to the planner.

use std::collections::BTreeMap;
use std::fmt;

use super::TrafficGraph;
use crate::estimators::{EstimatorError, Forecaster, MethodSpec};
use crate::ids::{AgvId, ArcId};
use crate::observation::TraversalObservation;

/// Lower bound applied to every planner cost, in seconds.
pub const MIN_COST: f64 = 1e-3;

pub type CostMap = BTreeMap<ArcId, f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum BankError {
    ArcMismatch { bank: ArcId, observed: ArcId },
    InvalidDuration(f64),
    UnknownArc(ArcId),
    Estimator(EstimatorError),
}

impl fmt::Display for BankError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankError::ArcMismatch { bank, observed } => write!(
                f,
                "observation for arc {observed} fed to the bank of arc {bank}"
            ),
            BankError::InvalidDuration(d) => write!(f, "traversal duration {d} is not positive"),
            BankError::UnknownArc(a) => write!(f, "arc {a} is not in the graph"),
            BankError::Estimator(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BankError {}

impl From<EstimatorError> for BankError {
    fn from(e: EstimatorError) -> Self {
        BankError::Estimator(e)
    }
}

/// Cost-parameter state of one arc.
#[derive(Debug, Clone)]
pub struct ArcCostBank {
    arc: ArcId,
    nominal: f64,
    forecaster: Forecaster,
    last_estimate: Option<f64>,
    observation_count: u64,
}

impl ArcCostBank {
    /// `nominal` is the cold-start cost, length / v_max.
    pub fn new(arc: ArcId, nominal: f64, spec: &MethodSpec) -> Result<Self, BankError> {
        Ok(Self {
            arc,
            nominal,
            forecaster: Forecaster::new(spec)?,
            last_estimate: None,
            observation_count: 0,
        })
    }

    pub fn arc(&self) -> &ArcId {
        &self.arc
    }

    pub fn nominal(&self) -> f64 {
        self.nominal
    }

    pub fn observation_count(&self) -> u64 {
        self.observation_count
    }

    /// Forecast of the next traversal, if the estimator has warmed up.
    pub fn last_estimate(&self) -> Option<f64> {
        self.last_estimate
    }

    pub fn is_warm(&self) -> bool {
        self.last_estimate.is_some()
    }

    /// Current cost estimate, falling back to the nominal time while cold. Not clamped.
    pub fn estimate(&self) -> f64 {
        self.last_estimate.unwrap_or(self.nominal)
    }

    /// Feeds one traversal into the estimator and returns the updated estimate.
    pub fn record_traversal(&mut self, obs: &TraversalObservation) -> Result<f64, BankError> {
        if obs.arc != self.arc {
            return Err(BankError::ArcMismatch {
                bank: self.arc.clone(),
                observed: obs.arc.clone(),
            });
        }
        if !(obs.duration > 0.0 && obs.duration.is_finite()) {
            return Err(BankError::InvalidDuration(obs.duration));
        }
        self.last_estimate = self.forecaster.observe(obs.duration)?;
        self.observation_count += 1;
        Ok(self.estimate())
    }
}

/// Current per-arc costs: bank estimates where available, nominal times for
/// cold or bank-less arcs, every value floored at [`MIN_COST`].
pub fn cost_snapshot<'a>(
    graph: &TrafficGraph,
    v_max: f64,
    banks: impl IntoIterator<Item = &'a ArcCostBank>,
) -> CostMap {
    let mut costs: CostMap = graph
        .arcs()
        .map(|a| (a.id.clone(), a.length / v_max))
        .collect();
    for bank in banks {
        if let Some(slot) = costs.get_mut(bank.arc()) {
            *slot = bank.estimate();
        }
    }
    for c in costs.values_mut() {
        // NaN also lands on the floor
        if !(*c >= MIN_COST) {
            *c = MIN_COST;
        }
    }
    costs
}

/// All banks of a graph, keyed by arc and, when `per_agv` is set, by AGV.
#[derive(Debug, Clone)]
pub struct CostBanks {
    spec: MethodSpec,
    v_max: f64,
    per_agv: bool,
    banks: BTreeMap<(ArcId, Option<AgvId>), ArcCostBank>,
}

impl CostBanks {
    pub fn new(spec: MethodSpec, v_max: f64, per_agv: bool) -> Result<Self, BankError> {
        // surface a bad estimator config before the first observation
        Forecaster::new(&spec)?;
        Ok(Self {
            spec,
            v_max,
            per_agv,
            banks: BTreeMap::new(),
        })
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    fn key(&self, arc: &ArcId, agv: &AgvId) -> (ArcId, Option<AgvId>) {
        (arc.clone(), self.per_agv.then(|| agv.clone()))
    }

    pub fn bank(&self, arc: &ArcId, agv: &AgvId) -> Option<&ArcCostBank> {
        self.banks.get(&self.key(arc, agv))
    }

    pub fn record(
        &mut self,
        graph: &TrafficGraph,
        obs: &TraversalObservation,
    ) -> Result<f64, BankError> {
        let arc = graph
            .arc(&obs.arc)
            .ok_or_else(|| BankError::UnknownArc(obs.arc.clone()))?;
        let key = self.key(&obs.arc, &obs.agv);
        let bank = match self.banks.get_mut(&key) {
            Some(b) => b,
            None => {
                let b = ArcCostBank::new(arc.id.clone(), arc.length / self.v_max, &self.spec)?;
                self.banks.entry(key).or_insert(b)
            }
        };
        bank.record_traversal(obs)
    }

    /// Cost snapshot as seen by `agv` (only relevant with per-AGV banks).
    pub fn snapshot(&self, graph: &TrafficGraph, agv: &AgvId) -> CostMap {
        let wanted = self.per_agv.then_some(agv);
        cost_snapshot(
            graph,
            self.v_max,
            self.banks
                .iter()
                .filter(move |((_, owner), _)| owner.as_ref() == wanted)
                .map(|(_, b)| b),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{KfNoise, Method};
    use crate::traffic_graph::load_graph;

    fn graph() -> TrafficGraph {
        load_graph("node n1\nnode n2\narc a n1 n2 4\narc b n2 n1 2\n").unwrap()
    }

    fn obs(arc: &str, t: f64, d: f64) -> TraversalObservation {
        TraversalObservation::new(arc, "agv1", t, d)
    }

    #[test]
    fn fresh_bank_takes_first_observation() {
        let spec = MethodSpec::default_for(Method::Kf);
        let mut bank = ArcCostBank::new("a".into(), 8.0, &spec).unwrap();
        assert_eq!(bank.estimate(), 8.0);
        assert_eq!(bank.record_traversal(&obs("a", 0.0, 5.0)).unwrap(), 5.0);
        assert_eq!(bank.observation_count(), 1);
    }

    #[test]
    fn constant_observations_hold_estimate() {
        let spec = MethodSpec::default_for(Method::Kf);
        let mut bank = ArcCostBank::new("a".into(), 8.0, &spec).unwrap();
        let mut est = 0.0;
        for k in 0..50 {
            est = bank
                .record_traversal(&obs("a", k as f64 * 6.0, 5.0))
                .unwrap();
        }
        assert!((est - 5.0).abs() < 1e-6);
    }

    #[test]
    fn arc_mismatch_and_bad_duration() {
        let spec = MethodSpec::default_for(Method::Kf);
        let mut bank = ArcCostBank::new("a".into(), 8.0, &spec).unwrap();
        assert!(matches!(
            bank.record_traversal(&obs("b", 0.0, 1.0)),
            Err(BankError::ArcMismatch { .. })
        ));
        assert_eq!(
            bank.record_traversal(&obs("a", 0.0, 0.0)),
            Err(BankError::InvalidDuration(0.0))
        );
        assert_eq!(bank.observation_count(), 0);
    }

    #[test]
    fn cold_snapshot_is_nominal() {
        let g = graph();
        let banks = CostBanks::new(MethodSpec::default_for(Method::Kf), 0.5, false).unwrap();
        let snap = banks.snapshot(&g, &"agv1".into());
        assert_eq!(snap[&ArcId::from("a")], 8.0);
        assert_eq!(snap[&ArcId::from("b")], 4.0);
    }

    #[test]
    fn warmed_arc_only_differs() {
        let g = graph();
        let mut banks = CostBanks::new(MethodSpec::default_for(Method::Kf), 0.5, false).unwrap();
        banks.record(&g, &obs("a", 0.0, 9.5)).unwrap();
        let snap = banks.snapshot(&g, &"agv1".into());
        assert_eq!(snap[&ArcId::from("a")], 9.5);
        assert_eq!(snap[&ArcId::from("b")], 4.0);
    }

    #[test]
    fn negative_estimate_is_clamped() {
        // A = -1 flips the sign of every prediction; positive durations then
        // yield a negative forecast.
        let spec = MethodSpec::Kf {
            a: -1.0,
            c: 1.0,
            noise: KfNoise::Fixed { q: 0.01, r: 0.01 },
        };
        let g = graph();
        let mut banks = CostBanks::new(spec, 0.5, false).unwrap();
        let est = banks.record(&g, &obs("a", 0.0, 3.0)).unwrap();
        assert!(est < 0.0);
        let snap = banks.snapshot(&g, &"agv1".into());
        assert_eq!(snap[&ArcId::from("a")], MIN_COST);
        assert!(snap.values().all(|&c| c > 0.0));
    }

    #[test]
    fn per_agv_banks_are_separate() {
        let g = graph();
        let mut banks = CostBanks::new(MethodSpec::default_for(Method::Kf), 0.5, true).unwrap();
        banks.record(&g, &obs("a", 0.0, 9.5)).unwrap();
        assert_eq!(banks.snapshot(&g, &"agv1".into())[&ArcId::from("a")], 9.5);
        assert_eq!(banks.snapshot(&g, &"agv2".into())[&ArcId::from("a")], 8.0);
    }

    #[test]
    fn unknown_arc_rejected() {
        let g = graph();
        let mut banks = CostBanks::new(MethodSpec::default_for(Method::Kf), 0.5, false).unwrap();
        assert!(matches!(
            banks.record(&g, &obs("zz", 0.0, 1.0)),
            Err(BankError::UnknownArc(_))
        ));
    }
}
