//! Scalar Kalman filter alternating prediction and correction cycles.
//!
//! Model: x(k+1) = A x(k) + B u(k) + w(k), y(k) = C x(k) + v(k), with
//! Var(w) = Q, Var(v) = R and u fixed to zero.

use super::EstimatorError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub q: f64,
    pub r: f64,
}

impl KfModel {
    /// Random-walk parameter observed directly: A = 1, B = 0, C = 1.
    pub fn random_walk(q: f64, r: f64) -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 1.0,
            q,
            r,
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!(
                "measurement noise R = {} must be positive",
                self.r
            )));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!(
                "process noise Q = {} must be non-negative",
                self.q
            )));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(EstimatorError::InvalidConfig(
                "A, B, C must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Corrected,
    Predicted,
}

#[derive(Debug, Clone)]
pub struct KfState {
    model: KfModel,
    x_hat: f64,
    p: f64,
    last_gain: f64,
    phase: Phase,
}

impl KfState {
    pub fn new(model: KfModel, x0: f64, p0: f64) -> Result<Self, EstimatorError> {
        model.validate()?;
        if !x0.is_finite() {
            return Err(EstimatorError::InvalidConfig(format!(
                "x0 = {x0} not finite"
            )));
        }
        if !(p0 >= 0.0 && p0.is_finite()) {
            return Err(EstimatorError::InvalidConfig(format!(
                "P0 = {p0} must be non-negative"
            )));
        }
        Ok(Self {
            model,
            x_hat: x0,
            p: p0,
            last_gain: 0.0,
            phase: Phase::Corrected,
        })
    }

    pub fn model(&self) -> &KfModel {
        &self.model
    }

    /// Replaces Q and R, keeping the current estimate and variance.
    pub fn set_noise(&mut self, q: f64, r: f64) -> Result<(), EstimatorError> {
        let model = KfModel { q, r, ..self.model };
        model.validate()?;
        self.model = model;
        Ok(())
    }

    pub fn x_hat(&self) -> f64 {
        self.x_hat
    }

    pub fn variance(&self) -> f64 {
        self.p
    }

    pub(crate) fn set_variance(&mut self, p: f64) {
        self.p = p;
    }

    pub fn last_gain(&self) -> f64 {
        self.last_gain
    }

    pub fn is_predicted(&self) -> bool {
        self.phase == Phase::Predicted
    }

    /// Value the next prediction cycle would produce, without mutating state.
    pub fn forecast(&self) -> f64 {
        self.model.a * self.x_hat
    }

    /// Prediction cycle: x̂⁻ = A x̂, P⁻ = A² P + Q.
    pub fn predict(&mut self) -> Result<(f64, f64), EstimatorError> {
        let m = &self.model;
        let x = m.a * self.x_hat;
        let p = m.a * self.p * m.a + m.q;
        if !(x.is_finite() && p.is_finite()) {
            return Err(EstimatorError::NumericBreakdown("kalman prediction"));
        }
        self.x_hat = x;
        self.p = p;
        self.phase = Phase::Predicted;
        Ok((x, p))
    }

    /// Correction cycle with measurement `y`; requires a preceding `predict`.
    pub fn correct(&mut self, y: f64) -> Result<(f64, f64), EstimatorError> {
        if self.phase != Phase::Predicted {
            return Err(EstimatorError::CorrectWithoutPredict);
        }
        if !y.is_finite() {
            return Err(EstimatorError::NonFiniteObservation(y));
        }
        let m = &self.model;
        let innovation_var = m.c * self.p * m.c + m.r;
        if !(innovation_var > 0.0 && innovation_var.is_finite()) {
            return Err(EstimatorError::NumericBreakdown(
                "kalman innovation variance",
            ));
        }
        let gain = self.p * m.c / innovation_var;
        let x = self.x_hat + gain * (y - m.c * self.x_hat);
        let p = ((1.0 - gain * m.c) * self.p).max(0.0);
        if !(x.is_finite() && p.is_finite()) {
            return Err(EstimatorError::NumericBreakdown("kalman correction"));
        }
        self.x_hat = x;
        self.p = p;
        self.last_gain = gain;
        self.phase = Phase::Corrected;
        Ok((x, p))
    }
}

pub fn kf_predict(state: &mut KfState) -> Result<(f64, f64), EstimatorError> {
    state.predict()
}

pub fn kf_correct(state: &mut KfState, y: f64) -> Result<(f64, f64), EstimatorError> {
    state.correct(y)
}
