//! Command implementations behind the `agv-est` binary: configuration,
//! reference series, estimator comparison and closed-loop missions.

mod compare;
mod config;
mod csv_io;
mod mission;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub use compare::{compare, select_winner, CompareReport, MethodReport};
pub use config::{ArcOverride, EstimatorParams, MissionParams, ReservationSpec, ScenarioConfig};
pub use csv_io::{
    estimates_to_csv, series_from_csv, series_to_csv, stats_comment, ESTIMATE_HEADER, SERIES_HEADER,
};
pub use mission::{
    run_mission_scenario, BatteryAge, MissionReport, MissionRow, RouteChange, MISSION_HEADER,
};

use crate::agv_sim::generate_reference_series;
use crate::estimators::{run_estimator, Method};
use crate::ids::{ArcId, NodeId};
use crate::observation::TraversalObservation;
use crate::traffic_graph::{load_graph, TrafficGraph};

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// Unreadable or malformed input. Exit code 2.
    Input(String),
    /// The robot halted or no admissible route remained. Exit code 3.
    Aborted(String),
    /// Anything else, including failure to write outputs. Exit code 1.
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Internal(_) => 1,
            HarnessError::Input(_) => 2,
            HarnessError::Aborted(_) => 3,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Input(m) => write!(f, "bad input: {m}"),
            HarnessError::Aborted(m) => write!(f, "mission aborted: {m}"),
            HarnessError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

fn read_input(path: &Path, what: &str) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| {
        HarnessError::Input(format!("cannot read {what} file {}: {e}", path.display()))
    })
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, bytes)
        .map_err(|e| HarnessError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Loads the scenario config (defaults when `path` is `None`) and applies a
/// seed override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::parse(&read_input(p, "config")?)
            .map_err(|e| HarnessError::Input(format!("{}: {e}", p.display())))?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn load_graph_file(path: &Path) -> Result<TrafficGraph, HarnessError> {
    load_graph(&read_input(path, "graph")?)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))
}

/// Everything needed to repeat a run, written next to the main output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub seed: Option<u64>,
    pub config_path: Option<PathBuf>,
    pub graph_path: Option<PathBuf>,
    pub input_paths: Vec<PathBuf>,
    pub output_paths: Vec<PathBuf>,
    pub digest: Option<String>,
    /// Seconds since the Unix epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            command: command.to_string(),
            seed: None,
            config_path: None,
            graph_path: None,
            input_paths: Vec::new(),
            output_paths: Vec::new(),
            digest: None,
            timestamp,
        }
    }

    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into())
        };
        let mut s = format!("command {}\n", self.command);
        s += &format!(
            "seed {}\n",
            self.seed
                .map(|s| s.to_string())
                .unwrap_or_else(|| "-".into())
        );
        s += &format!("config {}\n", path(&self.config_path));
        s += &format!("graph {}\n", path(&self.graph_path));
        for p in &self.input_paths {
            s += &format!("input {}\n", p.display());
        }
        for p in &self.output_paths {
            s += &format!("output {}\n", p.display());
        }
        if let Some(d) = &self.digest {
            s += &format!("digest {d}\n");
        }
        s += &format!("timestamp {}\n", self.timestamp);
        s
    }

    /// Writes the manifest to `<out>.manifest`.
    pub fn write_beside(&self, out: &Path) -> Result<PathBuf, HarnessError> {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest");
        let path = PathBuf::from(name);
        write_output(&path, self.to_text().as_bytes())?;
        Ok(path)
    }
}

/// Common inputs of the config-driven commands.
#[derive(Debug, Clone, Default)]
pub struct CommonArgs {
    pub config: Option<PathBuf>,
    pub graph: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl CommonArgs {
    fn load(&self) -> Result<(ScenarioConfig, TrafficGraph), HarnessError> {
        let cfg = load_config(self.config.as_deref(), self.seed)?;
        let graph = load_graph_file(&self.graph)?;
        Ok((cfg, graph))
    }

    fn manifest(&self, command: &str, cfg: &ScenarioConfig) -> RunManifest {
        let mut m = RunManifest::new(command);
        m.seed = Some(cfg.seed);
        m.config_path = self.config.clone();
        m.graph_path = Some(self.graph.clone());
        m.output_paths = vec![self.out.clone()];
        m.digest = Some(cfg.digest());
        m
    }
}

/// The reference series of the configured arc.
pub fn simulate(
    cfg: &ScenarioConfig,
    graph: &TrafficGraph,
) -> Result<(ArcId, Vec<TraversalObservation>), HarnessError> {
    let sim = cfg.sim_config(graph)?;
    let arc = cfg.reference_arc(graph)?;
    let series = generate_reference_series(&sim, &arc, &cfg.reference_agv)
        .map_err(|e| HarnessError::Input(e.to_string()))?;
    Ok((arc, series))
}

/// Writes the reference series CSV; returns the number of data rows.
pub fn cmd_simulate(args: &CommonArgs) -> Result<usize, HarnessError> {
    let (cfg, graph) = args.load()?;
    let (_, series) = simulate(&cfg, &graph)?;
    write_output(&args.out, &series_to_csv(&series)?)?;
    args.manifest("simulate", &cfg).write_beside(&args.out)?;
    Ok(series.len())
}

/// Method and parameter overrides for `estimate`; unset fields keep defaults.
#[derive(Debug, Clone)]
pub struct EstimateArgs {
    pub series: PathBuf,
    pub out: PathBuf,
    pub method: String,
    pub arc: Option<ArcId>,
    pub window: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub alpha3: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
}

impl EstimateArgs {
    pub fn new(series: impl Into<PathBuf>, out: impl Into<PathBuf>, method: &str) -> Self {
        Self {
            series: series.into(),
            out: out.into(),
            method: method.to_string(),
            arc: None,
            window: None,
            lambda: None,
            alpha1: None,
            alpha2: None,
            alpha3: None,
            q: None,
            r: None,
        }
    }

    fn params(&self) -> EstimatorParams {
        let mut p = EstimatorParams::default();
        if let Some(v) = self.window {
            p.window = v;
        }
        if let Some(v) = self.lambda {
            p.lambda = v;
        }
        if let Some(v) = self.alpha1 {
            p.alpha1 = v;
        }
        if let Some(v) = self.alpha2 {
            p.alpha2 = v;
        }
        p.alpha3 = self.alpha3;
        p.kf_q = self.q;
        p.kf_r = self.r;
        p
    }
}

/// Runs one estimator over a series CSV and writes the estimates CSV.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<crate::estimators::EstimatorRun, HarnessError> {
    let method: Method = args
        .method
        .parse()
        .map_err(|e| HarnessError::Input(format!("{e}")))?;
    let spec = args.params().spec(method)?;
    let text = read_input(&args.series, "series")?;
    let mut series = series_from_csv(&text)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", args.series.display())))?;
    match &args.arc {
        Some(arc) => series.retain(|o| &o.arc == arc),
        None => {
            if let Some(first) = series.first() {
                if let Some(other) = series.iter().find(|o| o.arc != first.arc) {
                    return Err(HarnessError::Input(format!(
                        "series mixes arcs {} and {}; choose one with --arc",
                        first.arc, other.arc
                    )));
                }
            }
        }
    }
    let run = run_estimator(&spec, &series).map_err(|e| HarnessError::Input(e.to_string()))?;
    write_output(&args.out, &estimates_to_csv(&series, &run)?)?;
    let mut m = RunManifest::new("estimate");
    m.input_paths = vec![args.series.clone()];
    m.output_paths = vec![args.out.clone()];
    m.write_beside(&args.out)?;
    Ok(run)
}

/// Compares all estimator variants; writes the CSV report and returns the
/// text summary.
pub fn cmd_compare(args: &CommonArgs) -> Result<String, HarnessError> {
    let (cfg, graph) = args.load()?;
    let report = compare(&cfg, &graph)?;
    write_output(&args.out, report.to_csv().as_bytes())?;
    args.manifest("compare", &cfg).write_beside(&args.out)?;
    Ok(report.to_text())
}

#[derive(Debug, Clone)]
pub struct MissionArgs {
    pub common: CommonArgs,
    pub src: Option<NodeId>,
    pub dst: Option<NodeId>,
    pub battery_age: BatteryAge,
    pub legs: Option<usize>,
}

/// Runs a closed-loop mission and writes its log. A halt still writes the
/// log, then reports [`HarnessError::Aborted`].
pub fn cmd_mission(args: &MissionArgs) -> Result<MissionReport, HarnessError> {
    let (mut cfg, graph) = args.common.load()?;
    if let Some(s) = &args.src {
        cfg.mission.src = Some(s.clone());
    }
    if let Some(d) = &args.dst {
        cfg.mission.dst = Some(d.clone());
    }
    if let Some(l) = args.legs {
        cfg.mission.legs = l;
    }
    let src = cfg
        .mission
        .src
        .clone()
        .ok_or_else(|| HarnessError::Input("mission needs --src or mission.src".into()))?;
    let dst = cfg
        .mission
        .dst
        .clone()
        .ok_or_else(|| HarnessError::Input("mission needs --dst or mission.dst".into()))?;
    let report = run_mission_scenario(&cfg, &graph, &src, &dst, args.battery_age)?;
    write_output(&args.common.out, report.to_csv().as_bytes())?;
    let mut manifest = args.common.manifest("mission", &cfg);
    manifest.command = format!("mission {}", args.battery_age);
    manifest.write_beside(&args.common.out)?;
    match &report.halted {
        Some(e) => Err(HarnessError::Aborted(e.to_string())),
        None => Ok(report),
    }
}
