//! Count-based reward terms: the exploration-style transform of a count,
//! the pseudo-count exploration bonus, and the micro-objective reward with
//! its running-maximum normalizer.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapingConfig {
    /// Scale of the micro-objective reward.
    pub alpha: f64,
    /// Clip on the normalized micro-objective reward, in `(0, 1]`.
    pub r_max: f64,
    /// Exploration bonus coefficient.
    pub beta: f64,
    /// Floor on the running maximum used as normalizer.
    pub epsilon_cmax: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            r_max: 0.9,
            beta: 0.05,
            epsilon_cmax: 1e-8,
        }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be a nonnegative real"));
        }
        if !(self.r_max > 0.0 && self.r_max <= 1.0) {
            return Err(Error::config("r_max", "must lie in (0, 1]"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta", "must be a nonnegative real"));
        }
        if !(self.epsilon_cmax > 0.0 && self.epsilon_cmax.is_finite()) {
            return Err(Error::config(
                "epsilon_cmax",
                "must be a small positive real",
            ));
        }
        Ok(())
    }
}

/// Running maximum of `1 − R_exp` over a training run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CMaxTracker {
    current_max: f64,
}

impl CMaxTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tracker resumed at a previously reached maximum.
    pub fn at(current_max: f64) -> Self {
        Self {
            current_max: current_max.max(0.0),
        }
    }

    pub fn current_max(&self) -> f64 {
        self.current_max
    }

    pub fn observe(&mut self, value: f64) {
        if value > self.current_max {
            self.current_max = value;
        }
    }
}

/// `0.1 / sqrt(N + 0.01)`.
pub fn r_exp(count: f64) -> f64 {
    0.1 / (count.max(0.0) + 0.01).sqrt()
}

/// `β (N + 0.01)^(-1/2)`.
pub fn psc_bonus(count: f64, beta: f64) -> f64 {
    beta / (count.max(0.0) + 0.01).sqrt()
}

/// `α · min(R_max, (1 − R_exp) / R_c-max)`.
///
/// The tracker sees `1 − R_exp` before the ratio is taken, so the first
/// state with a positive count normalizes to exactly 1.
pub fn r_obj(r_exp_value: f64, tracker: &mut CMaxTracker, cfg: &ShapingConfig) -> f64 {
    let gain = (1.0 - r_exp_value).max(0.0);
    tracker.observe(gain);
    if gain == 0.0 {
        return 0.0;
    }
    let ratio = gain / tracker.current_max().max(cfg.epsilon_cmax);
    cfg.alpha * cfg.r_max.min(ratio)
}

/// External reward plus the micro-objective term.
pub fn shape_reward(external: f64, obj: f64) -> f64 {
    external + obj
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn r_exp_values() {
        assert!((r_exp(0.0) - 1.0).abs() < TOL);
        assert!((r_exp(0.99) - 0.1).abs() < TOL);
        assert!((r_exp(99.99) - 0.01).abs() < TOL);
    }

    #[test]
    fn psc_bonus_values() {
        assert!((psc_bonus(0.0, 0.05) - 0.5).abs() < TOL);
        assert!((psc_bonus(0.99, 1.0) - 1.0).abs() < TOL);
        for n in [0.0, 1.0, 17.5, 1e6] {
            assert_eq!(psc_bonus(n, 0.0), 0.0);
        }
    }

    #[test]
    fn r_obj_cases() {
        let cfg = ShapingConfig::default();
        let mut fresh = CMaxTracker::new();
        assert_eq!(r_obj(1.0, &mut fresh, &cfg), 0.0);

        let mut t = CMaxTracker::at(0.995);
        assert!((r_obj(0.005, &mut t, &cfg) - 0.9).abs() < TOL);

        let mut t = CMaxTracker::at(0.995);
        let got = r_obj(0.5, &mut t, &cfg);
        assert!((got - 0.5 / 0.995).abs() < TOL);
        assert!((got - 0.502_512_562_814_070_4).abs() < TOL);
        assert_eq!(t.current_max(), 0.995);
    }

    #[test]
    fn first_informative_state_self_normalizes() {
        let cfg = ShapingConfig::default();
        let mut t = CMaxTracker::new();
        let got = r_obj(r_exp(1.0), &mut t, &cfg);
        assert!((got - cfg.alpha * cfg.r_max.min(1.0)).abs() < TOL);
        let cfg = ShapingConfig {
            r_max: 1.0,
            alpha: 2.0,
            ..cfg
        };
        let mut t = CMaxTracker::new();
        assert!((r_obj(r_exp(3.0), &mut t, &cfg) - 2.0).abs() < TOL);
    }

    #[test]
    fn shape_reward_adds() {
        assert_eq!(shape_reward(0.0, 0.9), 0.9);
        assert_eq!(shape_reward(1.0, 0.0), 1.0);
        assert!((shape_reward(0.5, 0.3) - 0.8).abs() < TOL);
    }

    #[test]
    fn config_validation() {
        assert!(ShapingConfig::default().validate().is_ok());
        let bad = ShapingConfig {
            r_max: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn r_obj_bounded_and_tracker_monotone(
            counts in proptest::collection::vec(0.0f64..1e4, 1..50),
            alpha in 0.0f64..3.0,
            r_max in 0.01f64..1.0,
            start in 0.0f64..1.0,
        ) {
            let cfg = ShapingConfig { alpha, r_max, ..Default::default() };
            let mut t = CMaxTracker::at(start);
            for n in counts {
                let before = t.current_max();
                let v = r_obj(r_exp(n), &mut t, &cfg);
                prop_assert!(v >= 0.0 && v <= alpha * r_max + 1e-12);
                prop_assert!(t.current_max() >= before);
            }
        }

        #[test]
        fn bonuses_strictly_decrease_in_count(a in 0.0f64..1e5, gap in 1e-3f64..1e3) {
            prop_assert!(r_exp(a + gap) < r_exp(a));
            prop_assert!(psc_bonus(a + gap, 0.05) < psc_bonus(a, 0.05));
        }
    }
}
