//! Scenario configuration: a flat `key value` text format.
//!
//! One setting per line, `#` starts a comment. Keys are dotted
//! (`battery.t_empty 36000`). Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::agv_sim::{BatteryProfile, CostModel, SimConfig, SpeedResponse};
use crate::estimators::forecast::{
    DEFAULT_ALPHA1, DEFAULT_ALPHA2, DEFAULT_ALPHA3_FRACTION, DEFAULT_CALIBRATION_SAMPLES,
    DEFAULT_LAMBDA, DEFAULT_Q_RATIO, DEFAULT_RLS_P0, DEFAULT_WINDOW,
};
use crate::estimators::{Alpha3, KfNoise, Method, MethodSpec, RlsLambda};
use crate::ids::{AgvId, ArcId, NodeId};
use crate::traffic_graph::TrafficGraph;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArcOverride {
    pub friction: Option<f64>,
    pub noise_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorParams {
    pub window: usize,
    pub lambda: f64,
    pub p0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Absolute α3; `None` means a fraction of the running observation scale.
    pub alpha3: Option<f64>,
    pub kf_a: f64,
    pub kf_c: f64,
    pub kf_q: Option<f64>,
    pub kf_r: Option<f64>,
    pub kf_calibration: usize,
    pub kf_q_ratio: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            lambda: DEFAULT_LAMBDA,
            p0: DEFAULT_RLS_P0,
            alpha1: DEFAULT_ALPHA1,
            alpha2: DEFAULT_ALPHA2,
            alpha3: None,
            kf_a: 1.0,
            kf_c: 1.0,
            kf_q: None,
            kf_r: None,
            kf_calibration: DEFAULT_CALIBRATION_SAMPLES,
            kf_q_ratio: DEFAULT_Q_RATIO,
        }
    }
}

impl EstimatorParams {
    pub fn spec(&self, method: Method) -> Result<MethodSpec, HarnessError> {
        Ok(match method {
            Method::Lsmw => MethodSpec::Lsmw {
                window: self.window,
            },
            Method::RlsConst => MethodSpec::Rls {
                lambda: RlsLambda::Constant(self.lambda),
                p0: self.p0,
            },
            Method::RlsAdaptive => MethodSpec::Rls {
                lambda: RlsLambda::Adaptive {
                    alpha1: self.alpha1,
                    alpha2: self.alpha2,
                    alpha3: match self.alpha3 {
                        Some(a) => Alpha3::Absolute(a),
                        None => Alpha3::ScaleFraction(DEFAULT_ALPHA3_FRACTION),
                    },
                },
                p0: self.p0,
            },
            Method::Kf => MethodSpec::Kf {
                a: self.kf_a,
                c: self.kf_c,
                noise: match (self.kf_q, self.kf_r) {
                    (Some(q), Some(r)) => KfNoise::Fixed { q, r },
                    (None, None) => KfNoise::Calibrated {
                        samples: self.kf_calibration,
                        q_ratio: self.kf_q_ratio,
                    },
                    _ => {
                        return Err(HarnessError::Input(
                            "kalman q and r must be given together".into(),
                        ))
                    }
                },
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionParams {
    pub agv: AgvId,
    pub src: Option<NodeId>,
    pub dst: Option<NodeId>,
    /// Fraction of battery life already used for `--battery-age drained`.
    pub drained_fraction: f64,
    /// Traversals per arc fed to the banks before the mission starts.
    pub warmup_samples: usize,
    /// Seconds between warm-up traversals.
    pub warmup_interval: f64,
    pub legs: usize,
}

impl Default for MissionParams {
    fn default() -> Self {
        Self {
            agv: "agv2".into(),
            src: None,
            dst: None,
            drained_fraction: 0.985,
            warmup_samples: 10,
            warmup_interval: 5.0,
            legs: 1,
        }
    }
}

/// Occupancy held by another AGV before the mission starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservationSpec {
    pub agv: AgvId,
    pub arc: ArcId,
    pub entry: f64,
    pub exit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub sampling_interval: f64,
    pub v_max: f64,
    pub t_empty: f64,
    pub knots: Vec<(f64, f64)>,
    pub friction: f64,
    /// Noise standard deviation as a fraction of the arc's base time.
    pub noise_frac: f64,
    pub halt_soc: f64,
    pub speed: SpeedResponse,
    pub arcs: BTreeMap<ArcId, ArcOverride>,
    pub reference_arc: Option<ArcId>,
    pub reference_agv: AgvId,
    pub estimator: EstimatorParams,
    pub bank_method: Method,
    pub bank_per_agv: bool,
    pub mission: MissionParams,
    pub reservations: BTreeMap<String, ReservationSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            sampling_interval: 0.5,
            v_max: 0.5,
            t_empty: 36000.0,
            knots: BatteryProfile::DEFAULT_KNOTS.to_vec(),
            friction: 1.0,
            noise_frac: 0.02,
            halt_soc: 0.05,
            speed: SpeedResponse::default(),
            arcs: BTreeMap::new(),
            reference_arc: None,
            reference_agv: "agv1".into(),
            estimator: EstimatorParams::default(),
            bank_method: Method::Kf,
            bank_per_agv: false,
            mission: MissionParams::default(),
            reservations: BTreeMap::new(),
        }
    }
}

fn bad(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Input(format!("config line {line}: {}", msg.into()))
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| bad(line, format!("invalid value '{value}' for {key}")))
}

fn flag(line: usize, key: &str, value: &str) -> Result<bool, HarnessError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(
            line,
            format!("{key} expects true or false, got '{value}'"),
        )),
    }
}

fn parse_knots(line: usize, value: &str) -> Result<Vec<(f64, f64)>, HarnessError> {
    value
        .split_whitespace()
        .map(|pair| {
            let (f, s) = pair
                .split_once(':')
                .ok_or_else(|| bad(line, format!("knot '{pair}' is not fraction:soc")))?;
            Ok((
                num(line, "battery.knots", f)?,
                num(line, "battery.knots", s)?,
            ))
        })
        .collect()
}

fn fmt_knots(knots: &[(f64, f64)]) -> String {
    knots
        .iter()
        .map(|(f, s)| format!("{f}:{s}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = match content.split_once(char::is_whitespace) {
                Some((k, v)) => (k, v.trim()),
                None => return Err(bad(line, format!("key '{content}' has no value"))),
            };
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(bad(
                    line,
                    format!("duplicate key {key} (first set on line {first})"),
                ));
            }
            cfg.set(line, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), HarnessError> {
        let e = &mut self.estimator;
        let m = &mut self.mission;
        match key {
            "seed" => self.seed = num(line, key, value)?,
            "sampling_interval" => self.sampling_interval = num(line, key, value)?,
            "vehicle.v_max" => self.v_max = num(line, key, value)?,
            "battery.t_empty" => self.t_empty = num(line, key, value)?,
            "battery.knots" => self.knots = parse_knots(line, value)?,
            "model.friction" => self.friction = num(line, key, value)?,
            "model.noise_frac" => self.noise_frac = num(line, key, value)?,
            "model.halt_soc" => self.halt_soc = num(line, key, value)?,
            "speed.peak" => self.speed.peak = num(line, key, value)?,
            "speed.run_in_soc" => self.speed.run_in_soc = num(line, key, value)?,
            "speed.run_in_depth" => self.speed.run_in_depth = num(line, key, value)?,
            "speed.fade_soc" => self.speed.fade_soc = num(line, key, value)?,
            "speed.min" => self.speed.min = num(line, key, value)?,
            "reference.arc" => self.reference_arc = Some(value.into()),
            "reference.agv" => self.reference_agv = value.into(),
            "estimator.window" => e.window = num(line, key, value)?,
            "estimator.lambda" => e.lambda = num(line, key, value)?,
            "estimator.p0" => e.p0 = num(line, key, value)?,
            "estimator.alpha1" => e.alpha1 = num(line, key, value)?,
            "estimator.alpha2" => e.alpha2 = num(line, key, value)?,
            "estimator.alpha3" => e.alpha3 = Some(num(line, key, value)?),
            "estimator.kf_a" => e.kf_a = num(line, key, value)?,
            "estimator.kf_c" => e.kf_c = num(line, key, value)?,
            "estimator.kf_q" => e.kf_q = Some(num(line, key, value)?),
            "estimator.kf_r" => e.kf_r = Some(num(line, key, value)?),
            "estimator.kf_calibration" => e.kf_calibration = num(line, key, value)?,
            "estimator.kf_q_ratio" => e.kf_q_ratio = num(line, key, value)?,
            "bank.method" => {
                self.bank_method = value.parse().map_err(|err| bad(line, format!("{err}")))?
            }
            "bank.per_agv" => self.bank_per_agv = flag(line, key, value)?,
            "mission.agv" => m.agv = value.into(),
            "mission.src" => m.src = Some(value.into()),
            "mission.dst" => m.dst = Some(value.into()),
            "mission.drained_fraction" => m.drained_fraction = num(line, key, value)?,
            "mission.warmup_samples" => m.warmup_samples = num(line, key, value)?,
            "mission.warmup_interval" => m.warmup_interval = num(line, key, value)?,
            "mission.legs" => m.legs = num(line, key, value)?,
            _ => {
                if let Some(rest) = key.strip_prefix("arc.") {
                    let (arc, field) = rest
                        .rsplit_once('.')
                        .ok_or_else(|| bad(line, format!("unknown key {key}")))?;
                    let entry = self.arcs.entry(arc.into()).or_default();
                    match field {
                        "friction" => entry.friction = Some(num(line, key, value)?),
                        "noise_frac" => entry.noise_frac = Some(num(line, key, value)?),
                        _ => return Err(bad(line, format!("unknown key {key}"))),
                    }
                } else if let Some(label) = key.strip_prefix("reservation.") {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let [agv, arc, entry, exit] = parts[..] else {
                        return Err(bad(line, "reservation expects: <agv> <arc> <entry> <exit>"));
                    };
                    let entry: f64 = num(line, key, entry)?;
                    let exit: f64 = num(line, key, exit)?;
                    if !(entry.is_finite() && exit.is_finite() && entry < exit) {
                        return Err(bad(line, "reservation needs finite entry < exit"));
                    }
                    self.reservations.insert(
                        label.to_string(),
                        ReservationSpec {
                            agv: agv.into(),
                            arc: arc.into(),
                            entry,
                            exit,
                        },
                    );
                } else {
                    return Err(bad(line, format!("unknown key {key}")));
                }
            }
        }
        Ok(())
    }

    /// Every effective setting, one per line in a fixed order. Parsing this
    /// text gives back an equal config.
    pub fn canonical_text(&self) -> String {
        let e = &self.estimator;
        let m = &self.mission;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} {v}");
        };
        kv("seed", self.seed.to_string());
        kv("sampling_interval", self.sampling_interval.to_string());
        kv("vehicle.v_max", self.v_max.to_string());
        kv("battery.t_empty", self.t_empty.to_string());
        kv("battery.knots", fmt_knots(&self.knots));
        kv("model.friction", self.friction.to_string());
        kv("model.noise_frac", self.noise_frac.to_string());
        kv("model.halt_soc", self.halt_soc.to_string());
        kv("speed.peak", self.speed.peak.to_string());
        kv("speed.run_in_soc", self.speed.run_in_soc.to_string());
        kv("speed.run_in_depth", self.speed.run_in_depth.to_string());
        kv("speed.fade_soc", self.speed.fade_soc.to_string());
        kv("speed.min", self.speed.min.to_string());
        for (arc, o) in &self.arcs {
            if let Some(f) = o.friction {
                kv(&format!("arc.{arc}.friction"), f.to_string());
            }
            if let Some(n) = o.noise_frac {
                kv(&format!("arc.{arc}.noise_frac"), n.to_string());
            }
        }
        if let Some(a) = &self.reference_arc {
            kv("reference.arc", a.to_string());
        }
        kv("reference.agv", self.reference_agv.to_string());
        kv("estimator.window", e.window.to_string());
        kv("estimator.lambda", e.lambda.to_string());
        kv("estimator.p0", e.p0.to_string());
        kv("estimator.alpha1", e.alpha1.to_string());
        kv("estimator.alpha2", e.alpha2.to_string());
        if let Some(a) = e.alpha3 {
            kv("estimator.alpha3", a.to_string());
        }
        kv("estimator.kf_a", e.kf_a.to_string());
        kv("estimator.kf_c", e.kf_c.to_string());
        if let Some(q) = e.kf_q {
            kv("estimator.kf_q", q.to_string());
        }
        if let Some(r) = e.kf_r {
            kv("estimator.kf_r", r.to_string());
        }
        kv("estimator.kf_calibration", e.kf_calibration.to_string());
        kv("estimator.kf_q_ratio", e.kf_q_ratio.to_string());
        kv("bank.method", self.bank_method.to_string());
        kv("bank.per_agv", self.bank_per_agv.to_string());
        kv("mission.agv", m.agv.to_string());
        if let Some(n) = &m.src {
            kv("mission.src", n.to_string());
        }
        if let Some(n) = &m.dst {
            kv("mission.dst", n.to_string());
        }
        kv("mission.drained_fraction", m.drained_fraction.to_string());
        kv("mission.warmup_samples", m.warmup_samples.to_string());
        kv("mission.warmup_interval", m.warmup_interval.to_string());
        kv("mission.legs", m.legs.to_string());
        for (label, r) in &self.reservations {
            kv(
                &format!("reservation.{label}"),
                format!("{} {} {} {}", r.agv, r.arc, r.entry, r.exit),
            );
        }
        s
    }

    /// 64-bit digest of [`canonical_text`](Self::canonical_text), as 16 hex digits.
    pub fn digest(&self) -> String {
        let d = Sha256::digest(self.canonical_text().as_bytes());
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&d[..8]);
        format!("{:016x}", u64::from_be_bytes(bytes))
    }

    pub fn battery(&self) -> Result<BatteryProfile, HarnessError> {
        BatteryProfile::new(self.t_empty, self.knots.clone())
            .map_err(|e| HarnessError::Input(e.to_string()))
    }

    /// Ground-truth cost model of every arc in `graph`.
    pub fn sim_config(&self, graph: &TrafficGraph) -> Result<SimConfig, HarnessError> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(HarnessError::Input(format!(
                "vehicle.v_max {} must be positive",
                self.v_max
            )));
        }
        if let Some(arc) = self.arcs.keys().find(|a| graph.arc(a).is_none()) {
            return Err(HarnessError::Input(format!(
                "config overrides arc {arc}, which is not in the graph"
            )));
        }
        let mut models = BTreeMap::new();
        for arc in graph.arcs() {
            let o = self.arcs.get(&arc.id).cloned().unwrap_or_default();
            let base_time = arc.length / self.v_max;
            models.insert(
                arc.id.clone(),
                CostModel {
                    base_time,
                    friction: o.friction.unwrap_or(self.friction),
                    speed: self.speed,
                    noise_std: o.noise_frac.unwrap_or(self.noise_frac) * base_time,
                    halt_soc: self.halt_soc,
                },
            );
        }
        let config = SimConfig {
            seed: self.seed,
            battery: self.battery()?,
            models,
            sampling_interval: self.sampling_interval,
        };
        config
            .validate()
            .map_err(|e| HarnessError::Input(e.to_string()))?;
        Ok(config)
    }

    /// The configured reference arc, or the first arc of the graph.
    pub fn reference_arc(&self, graph: &TrafficGraph) -> Result<ArcId, HarnessError> {
        match &self.reference_arc {
            Some(a) if graph.arc(a).is_some() => Ok(a.clone()),
            Some(a) => Err(HarnessError::Input(format!(
                "reference arc {a} is not in the graph"
            ))),
            None => graph
                .arcs()
                .next()
                .map(|a| a.id.clone())
                .ok_or_else(|| HarnessError::Input("graph has no arcs".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_canonical_text() {
        let cfg = ScenarioConfig::default();
        let back = ScenarioConfig::parse(&cfg.canonical_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn full_config_round_trips() {
        let text = "\
seed 7
battery.knots 0:1 0.5:0.5 1:0 # linear
arc.a12.friction 1.5
estimator.alpha3 0.02
estimator.kf_q 0.001
estimator.kf_r 0.1
mission.src n1
reservation.r1 agv1 a23 5 15
";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.knots, vec![(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]);
        assert_eq!(cfg.arcs[&ArcId::from("a12")].friction, Some(1.5));
        assert_eq!(cfg.reservations["r1"].exit, 15.0);
        assert_eq!(ScenarioConfig::parse(&cfg.canonical_text()).unwrap(), cfg);
        assert_eq!(
            cfg.estimator.spec(Method::Kf).unwrap(),
            MethodSpec::Kf {
                a: 1.0,
                c: 1.0,
                noise: KfNoise::Fixed { q: 0.001, r: 0.1 }
            }
        );
    }

    #[test]
    fn errors_name_the_line() {
        for (text, needle) in [
            ("seed 1\nseed 2\n", "line 2"),
            ("bogus 1\n", "unknown key bogus"),
            ("\n\nseed x\n", "line 3"),
            ("seed\n", "no value"),
            ("reservation.r agv1 a 5\n", "reservation expects"),
            ("bank.per_agv yes\n", "true or false"),
        ] {
            let err = ScenarioConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{err}");
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed = 43;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn lone_kf_noise_rejected() {
        let cfg = ScenarioConfig::parse("estimator.kf_q 0.1\n").unwrap();
        assert!(cfg.estimator.spec(Method::Kf).is_err());
    }
}
