use super::SimError;

/// Piecewise-linear state-of-charge curve over the fraction of battery life.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryProfile {
    t_empty: f64,
    knots: Vec<(f64, f64)>,
}

impl BatteryProfile {
    /// Flat plateau with a steep tail, similar to a NiMH discharge curve.
    pub const DEFAULT_KNOTS: [(f64, f64); 5] = [
        (0.0, 1.0),
        (0.05, 0.93),
        (0.80, 0.88),
        (0.95, 0.30),
        (1.0, 0.0),
    ];

    pub fn new(t_empty: f64, knots: Vec<(f64, f64)>) -> Result<Self, SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(t_empty > 0.0 && t_empty.is_finite()) {
            return bad(format!("battery t_empty {t_empty} must be positive"));
        }
        if knots.len() < 2 {
            return bad("battery profile needs at least two knots".into());
        }
        if knots[0] != (0.0, 1.0) {
            return bad("first battery knot must be (0, 1)".into());
        }
        if knots[knots.len() - 1] != (1.0, 0.0) {
            return bad("last battery knot must be (1, 0)".into());
        }
        for w in knots.windows(2) {
            let ((f0, s0), (f1, s1)) = (w[0], w[1]);
            if !(f1 > f0) {
                return bad(format!(
                    "knot fractions must increase strictly ({f0} then {f1})"
                ));
            }
            if s1 > s0 {
                return bad(format!(
                    "state of charge must not increase ({s0} then {s1})"
                ));
            }
            if !(0.0..=1.0).contains(&s1) {
                return bad(format!("state of charge {s1} outside [0, 1]"));
            }
        }
        Ok(Self { t_empty, knots })
    }

    pub fn with_default_knots(t_empty: f64) -> Result<Self, SimError> {
        Self::new(t_empty, Self::DEFAULT_KNOTS.to_vec())
    }

    pub fn t_empty(&self) -> f64 {
        self.t_empty
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// State of charge after `t` seconds of operation; 1 for `t ≤ 0`.
    pub fn soc_at(&self, t: f64) -> f64 {
        if t >= self.t_empty {
            return 0.0;
        }
        if t <= 0.0 {
            return self.knots[0].1;
        }
        let frac = t / self.t_empty;
        // first knot with fraction > frac; frac sits in [knots[i-1], knots[i])
        let i = self.knots.partition_point(|&(f, _)| f <= frac);
        let (f0, s0) = self.knots[i - 1];
        let (f1, s1) = self.knots[i];
        s0 + (s1 - s0) * (frac - f0) / (f1 - f0)
    }
}

pub fn soc_at(profile: &BatteryProfile, t: f64) -> f64 {
    profile.soc_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let b = BatteryProfile::with_default_knots(3600.0).unwrap();
        assert_eq!(b.soc_at(0.0), 1.0);
        assert_eq!(b.soc_at(3600.0), 0.0);
        assert_eq!(b.soc_at(1e9), 0.0);
    }

    #[test]
    fn exact_at_knots() {
        let b = BatteryProfile::with_default_knots(1000.0).unwrap();
        assert_eq!(b.soc_at(50.0), 0.93);
        assert_eq!(b.soc_at(800.0), 0.88);
        assert_eq!(b.soc_at(950.0), 0.30);
    }

    #[test]
    fn midpoint_interpolates() {
        let b = BatteryProfile::with_default_knots(1000.0).unwrap();
        // halfway between (0.80, 0.88) and (0.95, 0.30)
        assert!((b.soc_at(875.0) - 0.59).abs() < 1e-12);
        assert!((b.soc_at(25.0) - 0.965).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(BatteryProfile::new(0.0, BatteryProfile::DEFAULT_KNOTS.to_vec()).is_err());
        assert!(BatteryProfile::new(10.0, vec![(0.0, 1.0)]).is_err());
        assert!(BatteryProfile::new(10.0, vec![(0.0, 0.9), (1.0, 0.0)]).is_err());
        assert!(
            BatteryProfile::new(10.0, vec![(0.0, 1.0), (0.5, 0.4), (0.5, 0.3), (1.0, 0.0)])
                .is_err()
        );
        assert!(
            BatteryProfile::new(10.0, vec![(0.0, 1.0), (0.5, 0.4), (0.7, 0.6), (1.0, 0.0)])
                .is_err()
        );
        assert!(BatteryProfile::new(10.0, vec![(0.0, 1.0), (1.0, 0.0)]).is_ok());
    }
}
