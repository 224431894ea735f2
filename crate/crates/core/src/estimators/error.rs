use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorError {
    /// Regressor length differs from the one the state was built for.
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// XᵀX over the current window is singular (degenerate regressors).
    SingularWindow,
    /// A configuration parameter is out of range.
    InvalidConfig(String),
    /// A recursion produced a non-finite or non-positive quantity.
    NumericBreakdown(&'static str),
    /// `kf_correct` was called without a preceding `kf_predict`.
    CorrectWithoutPredict,
    EmptySeries,
    SeriesTooShort {
        len: usize,
        window: usize,
    },
    NonFiniteObservation(f64),
}

impl fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorError::DimensionMismatch { expected, got } => write!(
                f,
                "regressor dimension mismatch: expected {expected}, got {got}"
            ),
            EstimatorError::SingularWindow => {
                write!(f, "singular window: XᵀX is not invertible")
            }
            EstimatorError::InvalidConfig(msg) => write!(f, "invalid estimator config: {msg}"),
            EstimatorError::NumericBreakdown(what) => write!(f, "numeric breakdown in {what}"),
            EstimatorError::CorrectWithoutPredict => {
                write!(f, "kalman correct step requires a prior predict step")
            }
            EstimatorError::EmptySeries => write!(f, "series is empty"),
            EstimatorError::SeriesTooShort { len, window } => write!(
                f,
                "series of length {len} is shorter than the window size {window}"
            ),
            EstimatorError::NonFiniteObservation(v) => write!(f, "non-finite observation {v}"),
        }
    }
}

impl std::error::Error for EstimatorError {}
