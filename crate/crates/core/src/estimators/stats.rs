/// Summary of an error sequence. `std_dev` is the population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean_error: f64,
    pub std_dev: f64,
    pub rmse: f64,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub count: usize,
}

impl ErrorStats {
    /// Returns `None` for an empty sequence.
    pub fn from_errors<I>(errors: I) -> Option<Self>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut count = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut sum_abs = 0.0;
        let mut max_abs: f64 = 0.0;
        let errors: Vec<f64> = errors.into_iter().collect();
        for &e in &errors {
            count += 1;
            sum += e;
            sum_sq += e * e;
            sum_abs += e.abs();
            max_abs = max_abs.max(e.abs());
        }
        if count == 0 {
            return None;
        }
        let n = count as f64;
        let mean = sum / n;
        // second pass for a numerically stable variance
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        Some(Self {
            mean_error: mean,
            std_dev: var.sqrt(),
            rmse: (sum_sq / n).sqrt(),
            max_abs,
            mean_abs: sum_abs / n,
            count,
        })
    }

    /// Stats with every magnitude divided by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            mean_error: self.mean_error / scale,
            std_dev: self.std_dev / scale,
            rmse: self.rmse / scale,
            max_abs: self.max_abs / scale,
            mean_abs: self.mean_abs / scale,
            count: self.count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_has_no_stats() {
        assert!(ErrorStats::from_errors(Vec::new()).is_none());
    }

    #[test]
    fn simple_values() {
        let s = ErrorStats::from_errors(vec![1.0, -1.0, 3.0, -3.0]).unwrap();
        assert_eq!(s.count, 4);
        assert_eq!(s.mean_error, 0.0);
        assert!((s.rmse - 5.0f64.sqrt()).abs() < 1e-15);
        assert!((s.std_dev - 5.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.max_abs, 3.0);
        assert_eq!(s.mean_abs, 2.0);
    }

    #[test]
    fn offset_errors() {
        let s = ErrorStats::from_errors(vec![2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.rmse, 2.0);
        assert_eq!(s.mean_error, 2.0);
    }
}
