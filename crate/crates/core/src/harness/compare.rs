use std::fmt::Write as _;
use std::thread;

use super::{simulate, HarnessError, ScenarioConfig};
use crate::agv_sim::reference_truth;
use crate::estimators::{run_on_values, ErrorStats, EstimatorRun, Method};
use crate::ids::ArcId;
use crate::traffic_graph::TrafficGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    /// One-step-ahead residuals against the noisy observations.
    pub residual: ErrorStats,
    /// Prediction error against the noise-free traversal time.
    pub truth: ErrorStats,
    /// `truth` divided by the plateau traversal time.
    pub truth_normalized: ErrorStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub arc: ArcId,
    pub methods: Vec<MethodReport>,
    pub winner: Method,
    pub series_length: usize,
    pub plateau_time: f64,
    pub digest: String,
}

/// Lowest residual rmse; an exact tie goes to the earlier method in
/// [`Method::ALL`] order.
pub fn select_winner(methods: &[MethodReport]) -> Option<Method> {
    let mut sorted: Vec<&MethodReport> = methods.iter().collect();
    sorted.sort_by(|a, b| {
        a.residual
            .rmse
            .total_cmp(&b.residual.rmse)
            .then(a.method.cmp(&b.method))
    });
    sorted.first().map(|m| m.method)
}

/// Runs every estimator variant over the same reference series.
pub fn compare(cfg: &ScenarioConfig, graph: &TrafficGraph) -> Result<CompareReport, HarnessError> {
    let (arc, series) = simulate(cfg, graph)?;
    let sim = cfg.sim_config(graph)?;
    let truth = reference_truth(&sim, &arc).map_err(|e| HarnessError::Internal(e.to_string()))?;
    let plateau_time = sim
        .model(&arc)
        .map_err(|e| HarnessError::Internal(e.to_string()))?
        .plateau_time();
    let values: Vec<f64> = series.iter().map(|o| o.duration).collect();
    let specs = Method::ALL
        .iter()
        .map(|&m| cfg.estimator.spec(m))
        .collect::<Result<Vec<_>, _>>()?;

    let runs: Vec<Result<EstimatorRun, HarnessError>> = thread::scope(|s| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                let values = &values;
                s.spawn(move || {
                    run_on_values(spec, values).map_err(|e| HarnessError::Input(e.to_string()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(HarnessError::Internal("estimator thread panicked".into()))
                })
            })
            .collect()
    });

    let mut methods = Vec::with_capacity(runs.len());
    for run in runs {
        let run = run?;
        let missing = || {
            HarnessError::Input(format!(
                "{} produced no forecasts on this series",
                run.method
            ))
        };
        let residual = run.stats.ok_or_else(missing)?;
        let truth = run.stats_against(&truth).ok_or_else(missing)?;
        methods.push(MethodReport {
            method: run.method,
            residual,
            truth,
            truth_normalized: truth.scaled(plateau_time),
        });
    }
    let winner =
        select_winner(&methods).ok_or_else(|| HarnessError::Internal("no methods".into()))?;
    Ok(CompareReport {
        arc,
        methods,
        winner,
        series_length: series.len(),
        plateau_time,
        digest: cfg.digest(),
    })
}

impl CompareReport {
    pub fn method(&self, m: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|r| r.method == m)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "method,count,rmse,std,mean,mean_abs,max_abs,truth_rmse,truth_rmse_norm,truth_mean_abs_norm\n",
        );
        for m in &self.methods {
            let r = &m.residual;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                m.method,
                r.count,
                r.rmse,
                r.std_dev,
                r.mean_error,
                r.mean_abs,
                r.max_abs,
                m.truth.rmse,
                m.truth_normalized.rmse,
                m.truth_normalized.mean_abs
            );
        }
        let _ = writeln!(s, "# winner={}", self.winner);
        let _ = writeln!(s, "# arc={}", self.arc);
        let _ = writeln!(s, "# series_length={}", self.series_length);
        let _ = writeln!(s, "# plateau_time={}", self.plateau_time);
        let _ = writeln!(s, "# digest={}", self.digest);
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "arc {} | {} samples | plateau {:.4} s | digest {}\n",
            self.arc, self.series_length, self.plateau_time, self.digest
        );
        let _ = writeln!(
            s,
            "{:<13} {:>12} {:>12} {:>12} {:>14}",
            "method", "rmse", "std", "mean", "truth_rmse/pl"
        );
        for m in &self.methods {
            let _ = writeln!(
                s,
                "{:<13} {:>12.4e} {:>12.4e} {:>12.4e} {:>14.4e}",
                m.method.name(),
                m.residual.rmse,
                m.residual.std_dev,
                m.residual.mean_error,
                m.truth_normalized.rmse
            );
        }
        let _ = writeln!(s, "winner: {}", self.winner);
        s
    }
}
