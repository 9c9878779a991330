//! Sequential density models and the pseudo-count derived from the
//! probability of an observation before and after one update.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::Observation;

/// Pseudo-count reported when a model is numerically certain of `x`.
pub const PSEUDO_COUNT_CAP: f64 = 1e9;

/// Sequential probability assignment over observations.
pub trait DensityModel {
    /// Probability of `x` under the current model.
    fn prob(&self, x: &Observation) -> f64;

    /// Probability `x` would have after one update on `x`, without updating.
    fn recoding_prob(&self, x: &Observation) -> f64;

    /// Updates on `x` and returns the recoding probability.
    fn update(&mut self, x: &Observation) -> f64;

    /// Count to report when `ρ′ ≤ ρ` and the closed form is singular.
    fn degenerate_count(&self, _x: &Observation) -> f64 {
        PSEUDO_COUNT_CAP
    }

    /// Pseudo-count of `x` without advancing the model.
    ///
    /// Singular cases follow the clamp policy: zero when `ρ = 0`, otherwise
    /// [`DensityModel::degenerate_count`].
    fn pseudo_count(&self, x: &Observation) -> f64 {
        let rho = self.prob(x);
        if rho <= 0.0 {
            return 0.0;
        }
        pseudo_count(rho, self.recoding_prob(x)).unwrap_or_else(|_| self.degenerate_count(x))
    }
}

/// `ρ(1 − ρ′) / (ρ′ − ρ)`; requires `0 ≤ ρ < ρ′ ≤ 1`.
pub fn pseudo_count(rho: f64, rho_prime: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) || !(0.0..=1.0).contains(&rho_prime) || rho_prime <= rho {
        return Err(Error::DegenerateModel { rho, rho_prime });
    }
    Ok((rho * (1.0 - rho_prime) / (rho_prime - rho)).max(0.0))
}

/// Same quantity from log-probabilities, rewritten as
/// `(1 − ρ′) / (exp(ln ρ′ − ln ρ) − 1)` to survive tiny probabilities.
fn pseudo_count_from_logs(log_rho: f64, log_rho_prime: f64) -> Option<f64> {
    if log_rho == f64::NEG_INFINITY {
        return Some(0.0);
    }
    let gap = log_rho_prime - log_rho;
    if !(gap > 0.0) {
        return None;
    }
    let one_minus = -log_rho_prime.exp_m1();
    Some((one_minus / gap.exp_m1()).max(0.0))
}

/// Computes the pseudo-count of `x`, then advances the model by `x`.
pub fn observe_and_count<M: DensityModel + ?Sized>(model: &mut M, x: &Observation) -> f64 {
    let count = model.pseudo_count(x);
    model.update(x);
    count
}

/// Empirical counts: `ρ = N/n`, `ρ′ = (N+1)/(n+1)`; a fresh model assigns
/// `ρ = 0`, `ρ′ = 1`.
#[derive(Clone, Debug, Default)]
pub struct TabularCountModel {
    counts: HashMap<Observation, u64>,
    total: u64,
}

impl TabularCountModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, x: &Observation) -> u64 {
        self.counts.get(x).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &HashMap<Observation, u64> {
        &self.counts
    }
}

impl DensityModel for TabularCountModel {
    fn prob(&self, x: &Observation) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(x) as f64 / self.total as f64
        }
    }

    fn recoding_prob(&self, x: &Observation) -> f64 {
        (self.count(x) + 1) as f64 / (self.total + 1) as f64
    }

    fn update(&mut self, x: &Observation) -> f64 {
        *self.counts.entry(x.clone()).or_insert(0) += 1;
        self.total += 1;
        self.count(x) as f64 / self.total as f64
    }

    /// `N = n` makes `ρ = ρ′ = 1`; the count itself is known exactly.
    fn degenerate_count(&self, x: &Observation) -> f64 {
        self.count(x) as f64
    }
}

const ALPHABET: usize = 256;

/// Independent smoothed categorical per pixel; the joint probability is the
/// product over pixels.
#[derive(Clone, Debug)]
pub struct FactoredPixelModel {
    smoothing: f64,
    dims: Option<(u32, u32)>,
    counts: Vec<[u32; ALPHABET]>,
    total: u64,
}

impl Default for FactoredPixelModel {
    fn default() -> Self {
        Self::new(0.1).expect("default smoothing is positive")
    }
}

impl FactoredPixelModel {
    pub fn new(smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "smoothing must be positive, got {smoothing}"
            )));
        }
        Ok(Self {
            smoothing,
            dims: None,
            counts: Vec::new(),
            total: 0,
        })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Per-pixel probability of intensity `v` at pixel `i`.
    pub fn pixel_prob(&self, i: usize, v: u8) -> f64 {
        let c = self.counts.get(i).map_or(0, |c| c[v as usize]);
        (f64::from(c) + self.smoothing) / (self.total as f64 + ALPHABET as f64 * self.smoothing)
    }

    fn pixels<'a>(&self, x: &'a Observation) -> Option<&'a [u8]> {
        let grid = x.as_pixels()?;
        match self.dims {
            Some(d) if d != (grid.width(), grid.height()) => None,
            _ => Some(grid.values()),
        }
    }

    /// `(ln ρ, ln ρ′)`; non-pixel or mismatched observations get `-inf`.
    pub fn log_probs(&self, x: &Observation) -> (f64, f64) {
        match self.pixels(x) {
            Some(values) => (self.log_joint(values, 0), self.log_joint(values, 1)),
            None => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn log_joint(&self, values: &[u8], extra: u64) -> f64 {
        let denom = (self.total + extra) as f64 + ALPHABET as f64 * self.smoothing;
        let log_denom = denom.ln();
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = self.counts.get(i).map_or(0, |c| c[v as usize]) as u64 + extra;
                (c as f64 + self.smoothing).ln() - log_denom
            })
            .sum()
    }
}

impl DensityModel for FactoredPixelModel {
    fn prob(&self, x: &Observation) -> f64 {
        self.log_probs(x).0.exp()
    }

    fn recoding_prob(&self, x: &Observation) -> f64 {
        self.log_probs(x).1.exp()
    }

    /// Evaluated in log space; joint probabilities of large frames underflow.
    fn pseudo_count(&self, x: &Observation) -> f64 {
        let (lr, lrp) = self.log_probs(x);
        pseudo_count_from_logs(lr, lrp).unwrap_or_else(|| self.degenerate_count(x))
    }

    fn update(&mut self, x: &Observation) -> f64 {
        let Some(grid) = x.as_pixels() else {
            return 0.0;
        };
        match self.dims {
            None => {
                self.dims = Some((grid.width(), grid.height()));
                self.counts = vec![[0; ALPHABET]; grid.values().len()];
            }
            Some(d) if d != (grid.width(), grid.height()) => return 0.0,
            Some(_) => {}
        }
        for (c, &v) in self.counts.iter_mut().zip(grid.values()) {
            c[v as usize] += 1;
        }
        self.total += 1;
        self.log_joint(grid.values(), 0).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(id: u32) -> Observation {
        Observation::Discrete(id)
    }

    #[test]
    fn pseudo_count_closed_form() {
        assert!((pseudo_count(0.5, 0.6).unwrap() - 2.0).abs() < 1e-9);
        for rp in [1e-6, 0.3, 1.0] {
            assert_eq!(pseudo_count(0.0, rp).unwrap(), 0.0);
        }
        assert!((pseudo_count(3.0 / 5.0, 4.0 / 6.0).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn pseudo_count_rejects_degenerate_pairs() {
        assert!(matches!(
            pseudo_count(0.5, 0.5),
            Err(Error::DegenerateModel { .. })
        ));
        assert!(pseudo_count(0.6, 0.5).is_err());
        assert!(pseudo_count(-0.1, 0.5).is_err());
    }

    #[test]
    fn closed_form_recovers_counts_for_all_small_tables() {
        for n in 1..=50u64 {
            for big_n in 0..=n {
                let rho = big_n as f64 / n as f64;
                let rho_p = (big_n + 1) as f64 / (n + 1) as f64;
                if big_n == n {
                    assert!(pseudo_count(rho, rho_p).is_err());
                } else {
                    let got = pseudo_count(rho, rho_p).unwrap();
                    assert!(
                        (got - big_n as f64).abs() < 1e-9,
                        "n={n} N={big_n} got {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn tabular_first_sight_is_zero_and_repeats_count_up() {
        let mut m = TabularCountModel::new();
        assert_eq!(observe_and_count(&mut m, &d(1)), 0.0);
        observe_and_count(&mut m, &d(2));
        for k in 1..=20 {
            let got = observe_and_count(&mut m, &d(1));
            assert!((got - k as f64).abs() < 1e-9);
        }
        assert_eq!(m.total(), 22);
    }

    #[test]
    fn tabular_certain_model_reports_exact_count() {
        let mut m = TabularCountModel::new();
        observe_and_count(&mut m, &d(5));
        assert_eq!(observe_and_count(&mut m, &d(5)), 1.0);
        assert_eq!(observe_and_count(&mut m, &d(5)), 2.0);
    }

    #[test]
    fn tabular_recoding_never_below_prob() {
        let mut m = TabularCountModel::new();
        for id in [1, 2, 1, 3, 1, 1, 2] {
            let before = m.prob(&d(id));
            let after = m.update(&d(id));
            assert!(after >= before);
            assert!((0.0..=1.0).contains(&after));
        }
    }

    #[test]
    fn factored_pixel_probabilities_normalize() {
        let mut m = FactoredPixelModel::default();
        let frame = Observation::pixels(2, 1, vec![7, 200]).unwrap();
        m.update(&frame);
        m.update(&Observation::pixels(2, 1, vec![7, 3]).unwrap());
        for i in 0..2 {
            let sum: f64 = (0..=255u8).map(|v| m.pixel_prob(i, v)).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn factored_pixel_repeated_frame_counts_strictly_increase() {
        let mut m = FactoredPixelModel::default();
        let frame = Observation::pixels(4, 4, (0..16).map(|i| (i * 13) as u8).collect()).unwrap();
        let mut prev = -1.0;
        for _ in 0..100 {
            let before = m.prob(&frame);
            let c = observe_and_count(&mut m, &frame);
            assert!(c > prev, "pseudo-count {c} did not exceed {prev}");
            assert!(m.prob(&frame) >= before);
            prev = c;
        }
    }

    #[test]
    fn factored_pixel_ignores_discrete_observations() {
        let mut m = FactoredPixelModel::default();
        assert_eq!(observe_and_count(&mut m, &d(3)), 0.0);
        assert!(FactoredPixelModel::new(0.0).is_err());
    }
}
