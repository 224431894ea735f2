//! Scalar one-step-ahead forecasters over a traversal-time series.
//!
//! The regressor is fixed to the scalar 1, so every method estimates the local
//! mean traversal time. A forecaster's `forecast()` is its prediction for the
//! next observation, formed before that observation is incorporated.

use std::fmt;
use std::str::FromStr;

use super::kalman::{KfModel, KfState};
use super::lsmw::LsmwState;
use super::rls::{AdaptiveLambda, LambdaMode, RlsState};
use super::{ErrorStats, EstimatorError, Sample};
use crate::observation::TraversalObservation;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_LAMBDA: f64 = 0.9;
pub const DEFAULT_RLS_P0: f64 = 1e8;
pub const DEFAULT_ALPHA1: f64 = 0.5;
pub const DEFAULT_ALPHA2: f64 = 10.0;
pub const DEFAULT_ALPHA3_FRACTION: f64 = 0.01;
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 20;
pub const DEFAULT_Q_RATIO: f64 = 200.0;

/// The four compared estimator variants, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Lsmw,
    RlsConst,
    RlsAdaptive,
    Kf,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Lsmw,
        Method::RlsConst,
        Method::RlsAdaptive,
        Method::Kf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lsmw => "lsmw",
            Method::RlsConst => "rls",
            Method::RlsAdaptive => "rls-adaptive",
            Method::Kf => "kf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = EstimatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lsmw" => Ok(Method::Lsmw),
            "rls" | "rls-const" => Ok(Method::RlsConst),
            "rls-adaptive" => Ok(Method::RlsAdaptive),
            "kf" => Ok(Method::Kf),
            other => Err(EstimatorError::InvalidConfig(format!(
                "unknown method '{other}' (expected lsmw, rls, rls-adaptive or kf)"
            ))),
        }
    }
}

/// α3 either as an absolute residual threshold or as a fraction of the
/// running mean observation magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha3 {
    Absolute(f64),
    ScaleFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RlsLambda {
    Constant(f64),
    Adaptive {
        alpha1: f64,
        alpha2: f64,
        alpha3: Alpha3,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KfNoise {
    Fixed {
        q: f64,
        r: f64,
    },
    /// R = Var(first differences) / 2 and Q = R / `q_ratio`, both taken from
    /// the first `samples` observations. Until then the filter runs with Q = 0,
    /// which makes its estimate the running mean.
    Calibrated {
        samples: usize,
        q_ratio: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Lsmw { window: usize },
    Rls { lambda: RlsLambda, p0: f64 },
    Kf { a: f64, c: f64, noise: KfNoise },
}

impl MethodSpec {
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::Lsmw => MethodSpec::Lsmw {
                window: DEFAULT_WINDOW,
            },
            Method::RlsConst => MethodSpec::Rls {
                lambda: RlsLambda::Constant(DEFAULT_LAMBDA),
                p0: DEFAULT_RLS_P0,
            },
            Method::RlsAdaptive => MethodSpec::Rls {
                lambda: RlsLambda::Adaptive {
                    alpha1: DEFAULT_ALPHA1,
                    alpha2: DEFAULT_ALPHA2,
                    alpha3: Alpha3::ScaleFraction(DEFAULT_ALPHA3_FRACTION),
                },
                p0: DEFAULT_RLS_P0,
            },
            Method::Kf => MethodSpec::Kf {
                a: 1.0,
                c: 1.0,
                noise: KfNoise::Calibrated {
                    samples: DEFAULT_CALIBRATION_SAMPLES,
                    q_ratio: DEFAULT_Q_RATIO,
                },
            },
        }
    }

    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Lsmw { .. } => Method::Lsmw,
            MethodSpec::Rls {
                lambda: RlsLambda::Constant(_),
                ..
            } => Method::RlsConst,
            MethodSpec::Rls { .. } => Method::RlsAdaptive,
            MethodSpec::Kf { .. } => Method::Kf,
        }
    }

    /// Observations needed before the first forecast exists.
    pub fn warm_up(&self) -> usize {
        match self {
            MethodSpec::Lsmw { window } => *window,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LsmwForecaster {
    state: LsmwState,
}

impl LsmwForecaster {
    pub fn new(window: usize) -> Result<Self, EstimatorError> {
        Ok(Self {
            state: LsmwState::without_history(window, 1)?,
        })
    }

    pub fn state(&self) -> &LsmwState {
        &self.state
    }

    pub fn forecast(&self) -> Option<f64> {
        self.state.last_estimate().map(|t| t[0])
    }

    pub fn observe(&mut self, y: f64) -> Result<Option<f64>, EstimatorError> {
        self.state.step(Sample::scalar(y))?;
        Ok(self.forecast())
    }
}

#[derive(Debug, Clone)]
pub struct RlsForecaster {
    lambda: RlsLambda,
    p0: f64,
    state: Option<RlsState>,
    abs_sum: f64,
    seen: u64,
}

impl RlsForecaster {
    pub fn new(lambda: RlsLambda, p0: f64) -> Result<Self, EstimatorError> {
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!(
                "P0 = {p0} must be positive"
            )));
        }
        // validate eagerly so a bad config fails before any data arrives
        RlsState::scalar(0.0, p0, initial_mode(&lambda)?)?;
        Ok(Self {
            lambda,
            p0,
            state: None,
            abs_sum: 0.0,
            seen: 0,
        })
    }

    pub fn state(&self) -> Option<&RlsState> {
        self.state.as_ref()
    }

    pub fn forecast(&self) -> Option<f64> {
        self.state.as_ref().map(|s| s.theta()[0])
    }

    pub fn observe(&mut self, y: f64) -> Result<Option<f64>, EstimatorError> {
        if !y.is_finite() {
            return Err(EstimatorError::NonFiniteObservation(y));
        }
        self.seen += 1;
        self.abs_sum += y.abs();
        let scale = self.abs_sum / self.seen as f64;

        let state = match self.state.as_mut() {
            Some(s) => s,
            None => self
                .state
                .insert(RlsState::scalar(y, self.p0, initial_mode(&self.lambda)?)?),
        };
        if let (
            RlsLambda::Adaptive {
                alpha3: Alpha3::ScaleFraction(frac),
                ..
            },
            LambdaMode::Adaptive(a),
        ) = (self.lambda, state.mode_mut())
        {
            a.alpha3 = frac * scale;
        }
        state.step(&Sample::scalar(y))?;
        Ok(self.forecast())
    }
}

fn initial_mode(lambda: &RlsLambda) -> Result<LambdaMode, EstimatorError> {
    Ok(match *lambda {
        RlsLambda::Constant(l) => LambdaMode::Constant(l),
        RlsLambda::Adaptive {
            alpha1,
            alpha2,
            alpha3,
        } => {
            let a3 = match alpha3 {
                Alpha3::Absolute(v) => v,
                Alpha3::ScaleFraction(f) => {
                    if !(f >= 0.0 && f.is_finite()) {
                        return Err(EstimatorError::InvalidConfig(format!(
                            "alpha3 fraction {f} must be non-negative"
                        )));
                    }
                    0.0
                }
            };
            LambdaMode::Adaptive(AdaptiveLambda::new(alpha1, alpha2, a3)?)
        }
    })
}

#[derive(Debug, Clone)]
pub struct KalmanForecaster {
    a: f64,
    c: f64,
    noise: KfNoise,
    state: Option<KfState>,
    calibration: Vec<f64>,
}

impl KalmanForecaster {
    pub fn new(a: f64, c: f64, noise: KfNoise) -> Result<Self, EstimatorError> {
        match noise {
            KfNoise::Fixed { q, r } => KfModel { a, b: 0.0, c, q, r }.validate()?,
            KfNoise::Calibrated { samples, q_ratio } => {
                if samples < 3 {
                    return Err(EstimatorError::InvalidConfig(
                        "noise calibration needs at least 3 observations".into(),
                    ));
                }
                if !(q_ratio > 0.0 && q_ratio.is_finite()) {
                    return Err(EstimatorError::InvalidConfig(format!(
                        "Q ratio {q_ratio} must be positive"
                    )));
                }
                KfModel {
                    a,
                    b: 0.0,
                    c,
                    q: 0.0,
                    r: 1.0,
                }
                .validate()?
            }
        }
        if c == 0.0 {
            return Err(EstimatorError::InvalidConfig("C must be non-zero".into()));
        }
        Ok(Self {
            a,
            c,
            noise,
            state: None,
            calibration: Vec::new(),
        })
    }

    pub fn state(&self) -> Option<&KfState> {
        self.state.as_ref()
    }

    pub fn forecast(&self) -> Option<f64> {
        self.state.as_ref().map(|s| s.model().c * s.forecast())
    }

    pub fn observe(&mut self, y: f64) -> Result<Option<f64>, EstimatorError> {
        if !y.is_finite() {
            return Err(EstimatorError::NonFiniteObservation(y));
        }
        match self.state.as_mut() {
            None => {
                let (q, r) = match self.noise {
                    KfNoise::Fixed { q, r } => (q, r),
                    KfNoise::Calibrated { .. } => (0.0, 1.0),
                };
                let model = KfModel {
                    a: self.a,
                    b: 0.0,
                    c: self.c,
                    q,
                    r,
                };
                // the first measurement counts as one observation of the state
                self.state = Some(KfState::new(model, y / self.c, r / (self.c * self.c))?);
            }
            Some(state) => {
                state.predict()?;
                state.correct(y)?;
            }
        }
        if let KfNoise::Calibrated { samples, q_ratio } = self.noise {
            if self.calibration.len() < samples {
                self.calibration.push(y);
                if self.calibration.len() == samples {
                    self.finish_calibration(q_ratio)?;
                }
            }
        }
        Ok(self.forecast())
    }

    fn finish_calibration(&mut self, q_ratio: f64) -> Result<(), EstimatorError> {
        let r = calibrated_r(&self.calibration);
        let state = self
            .state
            .as_mut()
            .expect("state exists after first observation");
        // variance so far was tracked in units of the provisional R = 1
        let p = state.variance() * r;
        state.set_noise(r / q_ratio, r)?;
        state.set_variance(p);
        Ok(())
    }
}

/// Half the sample variance of first differences, floored to stay positive.
pub fn calibrated_r(values: &[f64]) -> f64 {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let scale = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    (var / 2.0)
        .max(1e-12 * scale * scale)
        .max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone)]
pub enum Forecaster {
    Lsmw(LsmwForecaster),
    Rls(RlsForecaster),
    Kf(KalmanForecaster),
}

impl Forecaster {
    pub fn new(spec: &MethodSpec) -> Result<Self, EstimatorError> {
        Ok(match *spec {
            MethodSpec::Lsmw { window } => Forecaster::Lsmw(LsmwForecaster::new(window)?),
            MethodSpec::Rls { lambda, p0 } => Forecaster::Rls(RlsForecaster::new(lambda, p0)?),
            MethodSpec::Kf { a, c, noise } => Forecaster::Kf(KalmanForecaster::new(a, c, noise)?),
        })
    }

    pub fn forecast(&self) -> Option<f64> {
        match self {
            Forecaster::Lsmw(f) => f.forecast(),
            Forecaster::Rls(f) => f.forecast(),
            Forecaster::Kf(f) => f.forecast(),
        }
    }

    /// Incorporates `y` and returns the forecast for the following observation.
    pub fn observe(&mut self, y: f64) -> Result<Option<f64>, EstimatorError> {
        match self {
            Forecaster::Lsmw(f) => f.observe(y),
            Forecaster::Rls(f) => f.observe(y),
            Forecaster::Kf(f) => f.observe(y),
        }
    }
}

/// Output of [`run_estimator`]: the one-step-ahead prediction for every
/// observation (`None` during warm-up) and statistics of `y − prediction`.
#[derive(Debug, Clone)]
pub struct EstimatorRun {
    pub method: Method,
    pub predictions: Vec<Option<f64>>,
    pub stats: Option<ErrorStats>,
}

impl EstimatorRun {
    pub fn residuals<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.predictions
            .iter()
            .zip(values)
            .filter_map(|(p, y)| p.map(|p| y - p))
    }

    /// Statistics of prediction errors against a reference (e.g. noise-free) signal.
    pub fn stats_against(&self, reference: &[f64]) -> Option<ErrorStats> {
        ErrorStats::from_errors(
            self.predictions
                .iter()
                .zip(reference)
                .filter_map(|(p, r)| p.map(|p| p - r)),
        )
    }
}

pub fn run_on_values(spec: &MethodSpec, values: &[f64]) -> Result<EstimatorRun, EstimatorError> {
    if values.is_empty() {
        return Err(EstimatorError::EmptySeries);
    }
    if let MethodSpec::Lsmw { window } = spec {
        if values.len() < *window {
            return Err(EstimatorError::SeriesTooShort {
                len: values.len(),
                window: *window,
            });
        }
    }
    let mut forecaster = Forecaster::new(spec)?;
    let mut predictions = Vec::with_capacity(values.len());
    for &y in values {
        predictions.push(forecaster.forecast());
        forecaster.observe(y)?;
    }
    let stats = ErrorStats::from_errors(
        predictions
            .iter()
            .zip(values)
            .filter_map(|(p, y)| p.map(|p| y - p)),
    );
    Ok(EstimatorRun {
        method: spec.method(),
        predictions,
        stats,
    })
}

/// Runs `spec` over the durations of `series` in time order.
pub fn run_estimator(
    spec: &MethodSpec,
    series: &[TraversalObservation],
) -> Result<EstimatorRun, EstimatorError> {
    if series.windows(2).any(|w| w[1].start_time < w[0].start_time) {
        return Err(EstimatorError::InvalidConfig(
            "series is not ordered by start time".into(),
        ));
    }
    let values: Vec<f64> = series.iter().map(|o| o.duration).collect();
    run_on_values(spec, &values)
}
