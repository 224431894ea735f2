use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{true_traversal_time, BatteryProfile, CostModel, SimError};
use crate::ids::{AgvId, ArcId};
use crate::observation::TraversalObservation;
use crate::traffic_graph::TrafficGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub battery: BatteryProfile,
    pub models: BTreeMap<ArcId, CostModel>,
    /// Seconds between reference samples.
    pub sampling_interval: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.sampling_interval > 0.0 && self.sampling_interval.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "sampling interval {} must be positive",
                self.sampling_interval
            )));
        }
        for (arc, m) in &self.models {
            m.validate()
                .map_err(|e| SimError::InvalidConfig(format!("arc {arc}: {e}")))?;
        }
        Ok(())
    }

    pub fn model(&self, arc: &ArcId) -> Result<&CostModel, SimError> {
        self.models
            .get(arc)
            .ok_or_else(|| SimError::UnknownArc(arc.clone()))
    }
}

/// Deterministic generator for one named stream under `seed`.
pub fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(label.as_bytes());
    let mut stream = [0u8; 8];
    stream.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from_le_bytes(stream));
    rng
}

fn sample_times<'a>(config: &'a SimConfig, model: &CostModel) -> impl Iterator<Item = f64> + 'a {
    let halt = model.halt_soc;
    (0u64..)
        .map(move |k| k as f64 * config.sampling_interval)
        .take_while(move |&t| config.battery.soc_at(t) > halt)
}

/// Samples the arc every `sampling_interval` seconds from a full charge until
/// the vehicle halts.
pub fn generate_reference_series(
    config: &SimConfig,
    arc: &ArcId,
    agv: &AgvId,
) -> Result<Vec<TraversalObservation>, SimError> {
    config.validate()?;
    let model = config.model(arc)?;
    let mut rng = rng_for(config.seed, &format!("reference/{arc}"));
    sample_times(config, model)
        .map(|t| {
            let d = true_traversal_time(model, &config.battery, t, &mut rng)?;
            Ok(TraversalObservation {
                arc: arc.clone(),
                agv: agv.clone(),
                start_time: t,
                duration: d,
            })
        })
        .collect()
}

/// Noise-free traversal times at the reference sample instants.
pub fn reference_truth(config: &SimConfig, arc: &ArcId) -> Result<Vec<f64>, SimError> {
    config.validate()?;
    let model = config.model(arc)?;
    sample_times(config, model)
        .map(|t| model.expected_time(&config.battery, t))
        .collect()
}

/// Shared mission time, seconds since mission start.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MissionClock {
    now: f64,
}

impl MissionClock {
    pub fn new(start: f64) -> Self {
        Self { now: start }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn advance(&mut self, dt: f64) {
        self.now += dt;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgvState {
    pub id: AgvId,
    /// Battery life already consumed when the mission clock reads zero, seconds.
    pub battery_offset: f64,
}

impl AgvState {
    pub fn new(id: impl Into<AgvId>, battery_offset: f64) -> Self {
        Self {
            id: id.into(),
            battery_offset,
        }
    }

    pub fn battery_time(&self, clock: &MissionClock) -> f64 {
        self.battery_offset + clock.now()
    }
}

/// Traverses one arc starting at the current clock time and advances the clock.
pub fn traverse_arc<R: Rng + ?Sized>(
    config: &SimConfig,
    agv: &AgvState,
    arc: &ArcId,
    clock: &mut MissionClock,
    rng: &mut R,
) -> Result<TraversalObservation, SimError> {
    let model = config.model(arc)?;
    let start = clock.now();
    let d = true_traversal_time(model, &config.battery, agv.battery_time(clock), rng)?;
    clock.advance(d);
    Ok(TraversalObservation {
        arc: arc.clone(),
        agv: agv.id.clone(),
        start_time: start,
        duration: d,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionOutcome {
    pub observations: Vec<TraversalObservation>,
    /// Set when the battery ran out before the last arc.
    pub halted: Option<SimError>,
}

/// Drives `agv` along `path`; each arc is entered when the previous one is left.
pub fn run_mission<R: Rng + ?Sized>(
    config: &SimConfig,
    graph: &TrafficGraph,
    agv: &AgvState,
    path: &[ArcId],
    clock: &mut MissionClock,
    rng: &mut R,
) -> Result<MissionOutcome, SimError> {
    check_contiguous(graph, path)?;
    let mut observations = Vec::with_capacity(path.len());
    for arc in path {
        match traverse_arc(config, agv, arc, clock, rng) {
            Ok(obs) => observations.push(obs),
            Err(e @ SimError::Halted { .. }) => {
                return Ok(MissionOutcome {
                    observations,
                    halted: Some(e),
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MissionOutcome {
        observations,
        halted: None,
    })
}

fn check_contiguous(graph: &TrafficGraph, path: &[ArcId]) -> Result<(), SimError> {
    let mut prev_to = None;
    for id in path {
        let arc = graph
            .arc(id)
            .ok_or_else(|| SimError::UnknownArc(id.clone()))?;
        if let Some(to) = prev_to {
            if to != &arc.from {
                return Err(SimError::InvalidPath(format!(
                    "arc {id} starts at {} but the previous arc ends at {to}",
                    arc.from
                )));
            }
        }
        prev_to = Some(&arc.to);
    }
    Ok(())
}
