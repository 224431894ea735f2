//! Recursive least squares with a constant or residual-driven forgetting factor.

use nalgebra::{DMatrix, DVector};

use super::{EstimatorError, Sample};

/// Parameters of the residual-driven forgetting factor
/// λ = 1 − α1 (arctan(α2 (|ê| − α3)) / π + 1/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveLambda {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl AdaptiveLambda {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self, EstimatorError> {
        validate_alphas(alpha1, alpha2, alpha3)?;
        Ok(Self {
            alpha1,
            alpha2,
            alpha3,
        })
    }

    pub fn lambda(&self, e_prev: f64) -> f64 {
        lambda_unchecked(e_prev, self.alpha1, self.alpha2, self.alpha3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Constant(f64),
    Adaptive(AdaptiveLambda),
}

impl LambdaMode {
    fn validate(&self) -> Result<(), EstimatorError> {
        match *self {
            LambdaMode::Constant(l) if l > 0.0 && l <= 1.0 => Ok(()),
            LambdaMode::Constant(l) => Err(EstimatorError::InvalidConfig(format!(
                "forgetting factor {l} outside (0, 1]"
            ))),
            LambdaMode::Adaptive(a) => validate_alphas(a.alpha1, a.alpha2, a.alpha3),
        }
    }
}

fn validate_alphas(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<(), EstimatorError> {
    if !(alpha1 > 0.0 && alpha1 < 1.0) {
        return Err(EstimatorError::InvalidConfig(format!(
            "alpha1 = {alpha1} outside (0, 1)"
        )));
    }
    if !(alpha2 > 0.0 && alpha2.is_finite()) {
        return Err(EstimatorError::InvalidConfig(format!(
            "alpha2 = {alpha2} must be positive"
        )));
    }
    if !(alpha3 >= 0.0 && alpha3.is_finite()) {
        return Err(EstimatorError::InvalidConfig(format!(
            "alpha3 = {alpha3} must be non-negative"
        )));
    }
    Ok(())
}

/// Residual-driven forgetting factor. Strictly decreasing in `|e_prev|` and
/// bounded in `(1 − α1, 1)`.
pub fn adaptive_lambda(
    e_prev: f64,
    alpha1: f64,
    alpha2: f64,
    alpha3: f64,
) -> Result<f64, EstimatorError> {
    validate_alphas(alpha1, alpha2, alpha3)?;
    Ok(lambda_unchecked(e_prev, alpha1, alpha2, alpha3))
}

fn lambda_unchecked(e_prev: f64, alpha1: f64, alpha2: f64, alpha3: f64) -> f64 {
    let z = alpha2 * (e_prev.abs() - alpha3);
    // arctan(z)/π + 1/2 rewritten through arctan(1/|z|) so that neither bound
    // is reached by cancellation for moderate |z|.
    if z > 0.0 {
        (1.0 - alpha1) + alpha1 * (1.0 / z).atan() / std::f64::consts::PI
    } else if z < 0.0 {
        1.0 - alpha1 * (-1.0 / z).atan() / std::f64::consts::PI
    } else {
        1.0 - alpha1 / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct RlsState {
    theta: DVector<f64>,
    p: DMatrix<f64>,
    mode: LambdaMode,
    lambda: f64,
    last_gain: DVector<f64>,
    last_residual: f64,
    steps: u64,
    scratch: DMatrix<f64>,
}

impl RlsState {
    pub fn new(
        theta0: DVector<f64>,
        p0: DMatrix<f64>,
        mode: LambdaMode,
    ) -> Result<Self, EstimatorError> {
        let n = theta0.len();
        if n == 0 {
            return Err(EstimatorError::InvalidConfig(
                "empty parameter vector".into(),
            ));
        }
        if p0.nrows() != n || p0.ncols() != n {
            return Err(EstimatorError::InvalidConfig(format!(
                "P0 must be {n}x{n}, got {}x{}",
                p0.nrows(),
                p0.ncols()
            )));
        }
        if (&p0 - p0.transpose()).amax() > 1e-12 * p0.amax() {
            return Err(EstimatorError::InvalidConfig("P0 is not symmetric".into()));
        }
        if p0.clone().cholesky().is_none() {
            return Err(EstimatorError::InvalidConfig(
                "P0 is not positive definite".into(),
            ));
        }
        mode.validate()?;
        let lambda = match mode {
            LambdaMode::Constant(l) => l,
            LambdaMode::Adaptive(a) => a.lambda(0.0),
        };
        Ok(Self {
            theta: theta0,
            p: p0,
            mode,
            lambda,
            last_gain: DVector::zeros(n),
            last_residual: 0.0,
            steps: 0,
            scratch: DMatrix::zeros(n, n),
        })
    }

    /// Scalar-regressor state with `P0 = p0`.
    pub fn scalar(theta0: f64, p0: f64, mode: LambdaMode) -> Result<Self, EstimatorError> {
        Self::new(
            DVector::from_element(1, theta0),
            DMatrix::from_element(1, 1, p0),
            mode,
        )
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn mode(&self) -> &LambdaMode {
        &self.mode
    }

    pub fn mode_mut(&mut self) -> &mut LambdaMode {
        &mut self.mode
    }

    /// Forgetting factor used by the most recent update.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn last_gain(&self) -> &DVector<f64> {
        &self.last_gain
    }

    /// A-priori residual `y − xᵀθ̂` of the most recent update.
    pub fn last_residual(&self) -> f64 {
        self.last_residual
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, sample: &Sample) -> Result<&DVector<f64>, EstimatorError> {
        let x = &sample.regressor;
        if x.len() != self.theta.len() {
            return Err(EstimatorError::DimensionMismatch {
                expected: self.theta.len(),
                got: x.len(),
            });
        }
        if !sample.observation.is_finite() {
            return Err(EstimatorError::NonFiniteObservation(sample.observation));
        }

        let lambda = match self.mode {
            LambdaMode::Constant(l) => l,
            LambdaMode::Adaptive(a) => a.lambda(self.last_residual),
        };

        let residual = sample.observation - x.dot(&self.theta);
        let px = &self.p * x;
        let denom = lambda + x.dot(&px);
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(EstimatorError::NumericBreakdown("rls gain denominator"));
        }

        // P ← (P − Px xᵀP / denom) / λ, evaluated in the algebraically equal
        // Joseph form (I − k xᵀ) P (I − k xᵀ)ᵀ + λ k kᵀ with k = Px / denom,
        // which avoids the cancellation of the direct form when P0 is large
        let k = &px / denom;
        let mut a = DMatrix::<f64>::identity(x.len(), x.len());
        a.ger(-1.0, &k, x, 1.0);
        self.scratch = &a * &self.p * a.transpose();
        self.scratch.ger(lambda, &k, &k, 1.0);
        self.scratch /= lambda;
        let n = self.scratch.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * (self.scratch[(i, j)] + self.scratch[(j, i)]);
                self.scratch[(i, j)] = m;
                self.scratch[(j, i)] = m;
            }
        }
        self.last_gain.gemv(1.0, &self.scratch, x, 0.0);
        let finite = self
            .theta
            .iter()
            .zip(self.last_gain.iter())
            .all(|(t, k)| (t + k * residual).is_finite())
            && self.scratch.iter().all(|v| v.is_finite());
        if !finite {
            return Err(EstimatorError::NumericBreakdown("rls update"));
        }

        self.theta.axpy(residual, &self.last_gain, 1.0);
        std::mem::swap(&mut self.p, &mut self.scratch);
        self.lambda = lambda;
        self.last_residual = residual;
        self.steps += 1;
        Ok(&self.theta)
    }
}
