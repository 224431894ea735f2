//! Online estimators for scalar cost parameters: least-squares moving window,
//! recursive least squares with forgetting, and a Kalman filter.

mod error;
pub mod forecast;
pub mod kalman;
pub mod lsmw;
pub mod rls;
mod stats;

use nalgebra::DVector;

pub use error::EstimatorError;
pub use forecast::{
    run_estimator, run_on_values, Alpha3, EstimatorRun, Forecaster, KfNoise, Method, MethodSpec,
    RlsLambda,
};
pub use kalman::{kf_correct, kf_predict, KfModel, KfState};
pub use lsmw::LsmwState;
pub use rls::{adaptive_lambda, AdaptiveLambda, LambdaMode, RlsState};
pub use stats::ErrorStats;

/// One regression sample: `observation ≈ regressorᵀ θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub regressor: DVector<f64>,
    pub observation: f64,
}

impl Sample {
    pub fn new(regressor: Vec<f64>, observation: f64) -> Self {
        Self {
            regressor: DVector::from_vec(regressor),
            observation,
        }
    }

    /// Sample with the constant regressor `[1]`.
    pub fn scalar(observation: f64) -> Self {
        Self {
            regressor: DVector::from_element(1, 1.0),
            observation,
        }
    }
}

pub fn lsmw_step(
    state: &mut LsmwState,
    sample: Sample,
) -> Result<Option<DVector<f64>>, EstimatorError> {
    state.step(sample)
}

pub fn rls_step(state: &mut RlsState, sample: &Sample) -> Result<DVector<f64>, EstimatorError> {
    state.step(sample).cloned()
}
