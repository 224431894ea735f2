use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{BatteryProfile, SimError};

/// Speed as a fraction of v_max for a given state of charge.
///
/// Three regimes: a short run-in right after a full charge where speed climbs
/// linearly to `peak`, a plateau at `peak`, and a smoothstep collapse from
/// `peak` down to `min` between `fade_soc` and the halt threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedResponse {
    pub peak: f64,
    pub run_in_soc: f64,
    pub run_in_depth: f64,
    pub fade_soc: f64,
    pub min: f64,
}

impl Default for SpeedResponse {
    fn default() -> Self {
        Self {
            peak: 1.0,
            run_in_soc: 0.93,
            run_in_depth: 0.1,
            fade_soc: 0.6,
            min: 0.4,
        }
    }
}

impl SpeedResponse {
    /// Constant speed `peak` at every charge level above the halt threshold.
    pub fn constant(peak: f64) -> Self {
        Self {
            peak,
            run_in_soc: 1.0,
            run_in_depth: 0.0,
            fade_soc: 0.0,
            min: peak,
        }
    }

    pub fn validate(&self, halt_soc: f64) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.peak > 0.0 && self.peak <= 1.0) {
            return bad(format!("speed peak {} outside (0, 1]", self.peak));
        }
        if !(self.min > 0.0 && self.min <= self.peak) {
            return bad(format!("speed min {} outside (0, peak]", self.min));
        }
        if !(0.0..1.0).contains(&self.run_in_depth) {
            return bad(format!("run-in depth {} outside [0, 1)", self.run_in_depth));
        }
        if !(self.run_in_soc <= 1.0 && self.fade_soc <= self.run_in_soc) {
            return bad("speed breakpoints must satisfy fade_soc ≤ run_in_soc ≤ 1".into());
        }
        if self.run_in_depth > 0.0 && self.run_in_soc >= 1.0 {
            return bad("a run-in needs run_in_soc < 1".into());
        }
        if self.min < self.peak && self.fade_soc <= halt_soc {
            return bad("a speed collapse needs fade_soc above halt_soc".into());
        }
        Ok(())
    }

    pub fn speed(&self, soc: f64, halt_soc: f64) -> f64 {
        if soc >= self.run_in_soc {
            if self.run_in_depth == 0.0 {
                return self.peak;
            }
            let x = (soc - self.run_in_soc) / (1.0 - self.run_in_soc);
            self.peak * (1.0 - self.run_in_depth * x)
        } else if soc >= self.fade_soc {
            self.peak
        } else {
            let u = ((soc - halt_soc) / (self.fade_soc - halt_soc)).clamp(0.0, 1.0);
            self.min + (self.peak - self.min) * u * u * (3.0 - 2.0 * u)
        }
    }
}

/// Ground-truth traversal-time model of one arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// length / v_max, seconds.
    pub base_time: f64,
    pub friction: f64,
    pub speed: SpeedResponse,
    /// Seconds.
    pub noise_std: f64,
    pub halt_soc: f64,
}

impl CostModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.base_time > 0.0 && self.base_time.is_finite()) {
            return bad(format!("base time {} must be positive", self.base_time));
        }
        if !(self.friction >= 1.0 && self.friction.is_finite()) {
            return bad(format!("friction factor {} must be ≥ 1", self.friction));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise std {} must be ≥ 0", self.noise_std));
        }
        if !(self.halt_soc > 0.0 && self.halt_soc < 1.0) {
            return bad(format!("halt SoC {} outside (0, 1)", self.halt_soc));
        }
        self.speed.validate(self.halt_soc)
    }

    /// Noise-free traversal time at state of charge `soc`.
    pub fn mean_time(&self, soc: f64) -> f64 {
        self.base_time * self.friction / self.speed.speed(soc, self.halt_soc)
    }

    /// Noise-free traversal time after `t` seconds of battery life.
    pub fn expected_time(&self, profile: &BatteryProfile, t: f64) -> Result<f64, SimError> {
        let soc = profile.soc_at(t);
        if soc <= self.halt_soc {
            return Err(SimError::Halted { time: t, soc });
        }
        Ok(self.mean_time(soc))
    }

    /// Plateau traversal time, used to normalise error magnitudes.
    pub fn plateau_time(&self) -> f64 {
        self.base_time * self.friction / self.speed.peak
    }
}

/// Noisy traversal time; the noise draw is repeated until the duration is positive.
pub fn true_traversal_time<R: Rng + ?Sized>(
    model: &CostModel,
    profile: &BatteryProfile,
    t: f64,
    rng: &mut R,
) -> Result<f64, SimError> {
    let mean = model.expected_time(profile, t)?;
    if model.noise_std == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(0.0, model.noise_std)
        .map_err(|e| SimError::InvalidConfig(format!("noise distribution: {e}")))?;
    loop {
        let d = mean + normal.sample(rng);
        if d > 0.0 {
            return Ok(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(noise_std: f64) -> CostModel {
        CostModel {
            base_time: 8.0,
            friction: 1.0,
            speed: SpeedResponse::default(),
            noise_std,
            halt_soc: 0.05,
        }
    }

    #[test]
    fn unit_speed_gives_base_time() {
        let m = CostModel {
            speed: SpeedResponse::constant(1.0),
            ..model(0.0)
        };
        let b = BatteryProfile::with_default_knots(3600.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in [0.0, 100.0, 2000.0, 3500.0] {
            assert_eq!(true_traversal_time(&m, &b, t, &mut rng).unwrap(), 8.0);
        }
    }

    #[test]
    fn speed_is_continuous_at_breakpoints() {
        let s = SpeedResponse::default();
        for soc in [s.run_in_soc, s.fade_soc] {
            let lo = s.speed(soc - 1e-9, 0.05);
            let hi = s.speed(soc + 1e-9, 0.05);
            assert!((lo - hi).abs() < 1e-6, "jump at {soc}");
        }
        assert!((s.speed(1.0, 0.05) - 0.9).abs() < 1e-15);
        assert!((s.speed(0.05 + 1e-12, 0.05) - s.min).abs() < 1e-9);
    }

    #[test]
    fn halted_below_threshold() {
        let b = BatteryProfile::with_default_knots(3600.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            true_traversal_time(&model(0.1), &b, 3599.0, &mut rng),
            Err(SimError::Halted { .. })
        ));
    }

    #[test]
    fn seeded_draws_repeat() {
        let b = BatteryProfile::with_default_knots(3600.0).unwrap();
        let m = model(0.5);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|k| true_traversal_time(&m, &b, k as f64 * 10.0, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn heavy_noise_stays_positive() {
        let b = BatteryProfile::with_default_knots(3600.0).unwrap();
        let m = model(20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..2000 {
            assert!(true_traversal_time(&m, &b, k as f64, &mut rng).unwrap() > 0.0);
        }
    }

    #[test]
    fn validation() {
        assert!(model(0.1).validate().is_ok());
        assert!(CostModel {
            friction: 0.9,
            ..model(0.1)
        }
        .validate()
        .is_err());
        assert!(CostModel {
            halt_soc: 0.0,
            ..model(0.1)
        }
        .validate()
        .is_err());
        assert!(CostModel {
            noise_std: -1.0,
            ..model(0.1)
        }
        .validate()
        .is_err());
        let bad_speed = SpeedResponse {
            fade_soc: 0.01,
            ..SpeedResponse::default()
        };
        assert!(CostModel {
            speed: bad_speed,
            ..model(0.1)
        }
        .validate()
        .is_err());
    }
}
