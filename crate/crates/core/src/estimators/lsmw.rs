//! Least-squares moving window.
//!
//! Each full window of `l` samples yields θ̂ = (XᵀX)⁻¹XᵀY and the in-window
//! residual vector Y − Xθ̂. A series of length L produces L − l + 1 estimates.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{EstimatorError, Sample};

/// Relative pivot threshold below which the window normal matrix is treated as singular.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LsmwState {
    window: VecDeque<Sample>,
    capacity: usize,
    dim: usize,
    keep_history: bool,
    count: usize,
    last: Option<DVector<f64>>,
    estimates: Vec<DVector<f64>>,
    residuals: Vec<DVector<f64>>,
    normal: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl LsmwState {
    pub fn new(window: usize, dim: usize) -> Result<Self, EstimatorError> {
        if window == 0 {
            return Err(EstimatorError::InvalidConfig(
                "window size must be at least 1".into(),
            ));
        }
        if dim == 0 {
            return Err(EstimatorError::InvalidConfig(
                "regressor dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            window: VecDeque::with_capacity(window),
            capacity: window,
            dim,
            keep_history: true,
            count: 0,
            last: None,
            estimates: Vec::new(),
            residuals: Vec::new(),
            normal: DMatrix::zeros(dim, dim),
            rhs: DVector::zeros(dim),
        })
    }

    /// Like [`new`](Self::new) but only the latest estimate is kept;
    /// [`estimates`](Self::estimates) and [`residuals`](Self::residuals) stay empty.
    pub fn without_history(window: usize, dim: usize) -> Result<Self, EstimatorError> {
        let mut s = Self::new(window, dim)?;
        s.keep_history = false;
        Ok(s)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.capacity
    }

    pub fn estimates(&self) -> &[DVector<f64>] {
        &self.estimates
    }

    pub fn residuals(&self) -> &[DVector<f64>] {
        &self.residuals
    }

    pub fn last_estimate(&self) -> Option<&DVector<f64>> {
        self.last.as_ref()
    }

    /// Number of estimates produced so far.
    pub fn estimate_count(&self) -> usize {
        self.count
    }

    /// Pushes `sample`, evicting the oldest one when the window is full, and
    /// returns the estimate over the window once it holds exactly `l` samples.
    pub fn step(&mut self, sample: Sample) -> Result<Option<DVector<f64>>, EstimatorError> {
        if sample.regressor.len() != self.dim {
            return Err(EstimatorError::DimensionMismatch {
                expected: self.dim,
                got: sample.regressor.len(),
            });
        }
        if !sample.observation.is_finite() {
            return Err(EstimatorError::NonFiniteObservation(sample.observation));
        }
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(sample);
        if !self.is_full() {
            return Ok(None);
        }

        let theta = self.solve_window()?;
        if self.keep_history {
            let residual = DVector::from_iterator(
                self.window.len(),
                self.window
                    .iter()
                    .map(|s| s.observation - s.regressor.dot(&theta)),
            );
            self.estimates.push(theta.clone());
            self.residuals.push(residual);
        }
        self.count += 1;
        self.last = Some(theta.clone());
        Ok(Some(theta))
    }

    fn solve_window(&mut self) -> Result<DVector<f64>, EstimatorError> {
        self.normal.fill(0.0);
        self.rhs.fill(0.0);
        for s in &self.window {
            self.normal.ger(1.0, &s.regressor, &s.regressor, 1.0);
            self.rhs.axpy(s.observation, &s.regressor, 1.0);
        }

        let scale = self.normal.diagonal().amax();
        if scale == 0.0 || !scale.is_finite() {
            return Err(EstimatorError::SingularWindow);
        }
        let chol = self
            .normal
            .clone()
            .cholesky()
            .ok_or(EstimatorError::SingularWindow)?;
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v * v));
        if min_pivot <= SINGULAR_RTOL * scale {
            return Err(EstimatorError::SingularWindow);
        }
        Ok(chol.solve(&self.rhs))
    }
}
