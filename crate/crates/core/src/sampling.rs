//! First-visit and dissimilar sampling of trajectory states.
//!
//! Dissimilar sampling keeps a state only if it is far from every state
//! kept so far, where "far" means at least the mean of the recent
//! consecutive-state distances and at least a configured floor. Discrete
//! observations are either identical (distance 0) or infinitely far apart,
//! which makes dissimilar sampling reduce to first-visit sampling on them.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::types::Observation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    L1,
    L2,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(DistanceMetric::L1),
            "l2" => Ok(DistanceMetric::L2),
            other => Err(Error::config("metric", format!("unknown metric `{other}`"))),
        }
    }
}

impl std::fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMetric::L1 => "l1",
            DistanceMetric::L2 => "l2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissimilarConfig {
    /// Number of recent consecutive-state distances averaged per step.
    pub history: usize,
    /// Floor on the acceptance distance.
    pub min_diff: f64,
    pub metric: DistanceMetric,
}

impl Default for DissimilarConfig {
    fn default() -> Self {
        Self {
            history: 5,
            min_diff: 0.0,
            metric: DistanceMetric::L1,
        }
    }
}

impl DissimilarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.history == 0 {
            return Err(Error::config("history_size", "must be at least 1"));
        }
        if !(self.min_diff >= 0.0) {
            return Err(Error::config("min_pixel_diff", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Keeps each distinct observation at its first position.
pub fn first_visit_sample(states: &[Observation]) -> Vec<Observation> {
    let mut seen = HashSet::new();
    states.iter().filter(|s| seen.insert(*s)).cloned().collect()
}

/// Norm of the elementwise difference. Discrete observations are 0 apart
/// when equal and infinitely far apart otherwise.
pub fn state_distance(a: &Observation, b: &Observation, metric: DistanceMetric) -> Result<f64> {
    match (a, b) {
        (Observation::Discrete(x), Observation::Discrete(y)) => {
            Ok(if x == y { 0.0 } else { f64::INFINITY })
        }
        (Observation::Pixels(x), Observation::Pixels(y)) => {
            if (x.width(), x.height()) != (y.width(), y.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} vs {}x{}",
                    x.width(),
                    x.height(),
                    y.width(),
                    y.height()
                )));
            }
            let pairs = x.values().iter().zip(y.values());
            Ok(match metric {
                DistanceMetric::L1 => pairs.map(|(p, q)| f64::from(p.abs_diff(*q))).sum(),
                DistanceMetric::L2 => pairs
                    .map(|(p, q)| f64::from(p.abs_diff(*q)).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            })
        }
        _ => Err(Error::DimensionMismatch(
            "discrete and pixel observations".into(),
        )),
    }
}

/// Mean distance over the up-to-`h` consecutive pairs ending at index `i`.
pub fn recent_window_delta(
    states: &[Observation],
    i: usize,
    h: usize,
    metric: DistanceMetric,
) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidTrajectory(
            "recent window needs at least one preceding state".into(),
        ));
    }
    if i >= states.len() {
        return Err(Error::InvalidTrajectory(format!(
            "index {i} out of range for {} states",
            states.len()
        )));
    }
    let from = i.saturating_sub(h.max(1));
    let mut sum = 0.0;
    for k in from..i {
        sum += state_distance(&states[k], &states[k + 1], metric)?;
    }
    Ok(sum / (i - from) as f64)
}

/// True when `candidate` is strictly away from every kept state by at least
/// `threshold`. Identical states are never accepted, even at threshold 0.
fn far_from_all(
    kept: &[Observation],
    candidate: &Observation,
    threshold: f64,
    metric: DistanceMetric,
) -> Result<bool> {
    for s in kept {
        let d = state_distance(s, candidate, metric)?;
        if d <= 0.0 || d < threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Batch dissimilar sampling; the output always starts with `states[0]`.
pub fn dissimilar_sample(
    states: &[Observation],
    cfg: &DissimilarConfig,
) -> Result<Vec<Observation>> {
    let Some(first) = states.first() else {
        return Ok(Vec::new());
    };
    let mut out = vec![first.clone()];
    for i in 1..states.len() {
        let delta = recent_window_delta(states, i, cfg.history, cfg.metric)?;
        if far_from_all(&out, &states[i], delta.max(cfg.min_diff), cfg.metric)? {
            out.push(states[i].clone());
        }
    }
    Ok(out)
}

/// Whether `next` would be kept if appended to `running`.
pub fn should_reward(
    running: &[Observation],
    next: &Observation,
    cfg: &DissimilarConfig,
) -> Result<bool> {
    if running.is_empty() {
        return Ok(true);
    }
    let kept = dissimilar_sample(running, cfg)?;
    let mut all = running.to_vec();
    all.push(next.clone());
    let delta = recent_window_delta(&all, running.len(), cfg.history, cfg.metric)?;
    far_from_all(&kept, next, delta.max(cfg.min_diff), cfg.metric)
}

/// Streaming form of [`dissimilar_sample`]: one decision per pushed state,
/// holding only the last `h` pair distances and the kept states.
#[derive(Clone, Debug)]
pub struct DissimilarSampler {
    cfg: DissimilarConfig,
    prev: Option<Observation>,
    recent: VecDeque<f64>,
    kept: Vec<Observation>,
    kept_discrete: HashSet<u32>,
}

impl DissimilarSampler {
    pub fn new(cfg: DissimilarConfig) -> Self {
        Self {
            cfg,
            prev: None,
            recent: VecDeque::with_capacity(cfg.history + 1),
            kept: Vec::new(),
            kept_discrete: HashSet::new(),
        }
    }

    pub fn config(&self) -> &DissimilarConfig {
        &self.cfg
    }

    pub fn kept(&self) -> &[Observation] {
        &self.kept
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.recent.clear();
        self.kept.clear();
        self.kept_discrete.clear();
    }

    /// Feeds the next trajectory state; returns whether it was kept.
    pub fn push(&mut self, state: &Observation) -> Result<bool> {
        let Some(prev) = self.prev.replace(state.clone()) else {
            self.keep(state);
            return Ok(true);
        };
        let d = state_distance(&prev, state, self.cfg.metric)?;
        self.recent.push_back(d);
        if self.recent.len() > self.cfg.history.max(1) {
            self.recent.pop_front();
        }
        let accept = match state {
            // Distances to other ids are infinite, so only identity matters.
            Observation::Discrete(id) if self.kept.len() == self.kept_discrete.len() => {
                !self.kept_discrete.contains(id)
            }
            _ => {
                let delta = self.recent.iter().sum::<f64>() / self.recent.len() as f64;
                far_from_all(
                    &self.kept,
                    state,
                    delta.max(self.cfg.min_diff),
                    self.cfg.metric,
                )?
            }
        };
        if accept {
            self.keep(state);
        }
        Ok(accept)
    }

    fn keep(&mut self, state: &Observation) {
        if let Observation::Discrete(id) = state {
            self.kept_discrete.insert(*id);
        }
        self.kept.push(state.clone());
    }

    /// Takes the kept states and starts a new trajectory.
    pub fn take(&mut self) -> Vec<Observation> {
        let kept = std::mem::take(&mut self.kept);
        self.reset();
        kept
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(id: u32) -> Observation {
        Observation::Discrete(id)
    }

    fn frame(values: &[u8]) -> Observation {
        Observation::pixels(values.len() as u32, 1, values.to_vec()).unwrap()
    }

    #[test]
    fn first_visit_keeps_first_occurrences() {
        assert_eq!(
            first_visit_sample(&[d(0), d(1), d(0), d(2)]),
            vec![d(0), d(1), d(2)]
        );
        assert_eq!(first_visit_sample(&[d(0), d(0), d(0)]), vec![d(0)]);
        let distinct = vec![d(4), d(2), d(9)];
        assert_eq!(first_visit_sample(&distinct), distinct);
    }

    #[test]
    fn distances() {
        let a = frame(&[10, 20, 30]);
        assert_eq!(state_distance(&a, &a, DistanceMetric::L1).unwrap(), 0.0);
        let b = frame(&[20, 20, 30]);
        assert_eq!(state_distance(&a, &b, DistanceMetric::L1).unwrap(), 10.0);
        let c = frame(&[13, 24, 30]);
        assert!((state_distance(&a, &c, DistanceMetric::L2).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(
            state_distance(&d(3), &d(3), DistanceMetric::L1).unwrap(),
            0.0
        );
        assert_eq!(
            state_distance(&d(3), &d(4), DistanceMetric::L1).unwrap(),
            f64::INFINITY
        );
        assert!(state_distance(&a, &frame(&[1, 2]), DistanceMetric::L1).is_err());
        assert!(state_distance(&a, &d(1), DistanceMetric::L1).is_err());
    }

    #[test]
    fn recent_window_means() {
        let constant = vec![frame(&[5]); 6];
        for i in 1..6 {
            assert_eq!(
                recent_window_delta(&constant, i, 3, DistanceMetric::L1).unwrap(),
                0.0
            );
        }
        let ramp: Vec<_> = (0..6).map(|i| frame(&[i * 7])).collect();
        assert_eq!(
            recent_window_delta(&ramp, 5, 5, DistanceMetric::L1).unwrap(),
            7.0
        );
        assert_eq!(
            recent_window_delta(&ramp, 2, 5, DistanceMetric::L1).unwrap(),
            7.0
        );
        // Pair distances [4, 0, 8]: mean 4.
        let mixed = vec![frame(&[0]), frame(&[4]), frame(&[4]), frame(&[12])];
        assert_eq!(
            recent_window_delta(&mixed, 3, 3, DistanceMetric::L1).unwrap(),
            4.0
        );
        assert_eq!(
            recent_window_delta(&mixed, 3, 1, DistanceMetric::L1).unwrap(),
            8.0
        );
        assert!(recent_window_delta(&mixed, 0, 3, DistanceMetric::L1).is_err());
    }

    #[test]
    fn constant_frames_sample_once() {
        let cfg = DissimilarConfig {
            min_diff: 1.0,
            ..Default::default()
        };
        let frames = vec![frame(&[9, 9]); 5];
        assert_eq!(
            dissimilar_sample(&frames, &cfg).unwrap(),
            vec![frame(&[9, 9])]
        );
    }

    #[test]
    fn distinct_discrete_states_all_kept() {
        let states: Vec<_> = (0..7).map(d).collect();
        assert_eq!(
            dissimilar_sample(&states, &DissimilarConfig::default()).unwrap(),
            states
        );
    }

    #[test]
    fn near_duplicate_frame_is_excluded() {
        // Hand trace with h = 2, floor 5:
        //   f0 kept.
        //   f1: pair distances [40], threshold 40, |f1-f0| = 40 -> kept.
        //   f2: pairs [40, 38], threshold 39, |f2-f0| = 2 -> rejected.
        //   f3: pairs [38, 42], threshold 40, |f3-f0| = 40, |f3-f1| = 80 -> kept.
        //   f4: pairs [42, 100], threshold 71, |f4-f0| = 60 -> rejected.
        let f = [
            frame(&[0, 0]),
            frame(&[40, 0]),
            frame(&[2, 0]),
            frame(&[0, 40]),
            frame(&[60, 0]),
        ];
        let cfg = DissimilarConfig {
            history: 2,
            min_diff: 5.0,
            metric: DistanceMetric::L1,
        };
        let out = dissimilar_sample(&f, &cfg).unwrap();
        assert_eq!(out, vec![f[0].clone(), f[1].clone(), f[3].clone()]);
    }

    #[test]
    fn should_reward_cases() {
        let cfg = DissimilarConfig {
            history: 5,
            min_diff: 10.0,
            metric: DistanceMetric::L1,
        };
        assert!(should_reward(&[], &frame(&[1]), &cfg).unwrap());
        let run = vec![frame(&[0]), frame(&[50])];
        assert!(!should_reward(&run, &frame(&[0]), &cfg).unwrap());
        // Window mean (50 + 150) / 2 = 100; 200 is 200 and 150 away.
        assert!(should_reward(&run, &frame(&[200]), &cfg).unwrap());
        let mut all = run.clone();
        all.push(frame(&[200]));
        assert_eq!(
            dissimilar_sample(&all, &cfg).unwrap().last(),
            Some(&frame(&[200]))
        );
    }

    proptest! {
        #[test]
        fn discrete_dissimilar_equals_first_visit(ids in proptest::collection::vec(0u32..8, 1..60)) {
            let states: Vec<_> = ids.into_iter().map(d).collect();
            let out = dissimilar_sample(&states, &DissimilarConfig::default()).unwrap();
            prop_assert_eq!(out, first_visit_sample(&states));
        }

        #[test]
        fn output_is_prefix_anchored_subsequence(
            vals in proptest::collection::vec(proptest::collection::vec(0u8..4, 3), 1..30),
            h in 1usize..6,
            floor in 0.0f64..4.0,
        ) {
            let states: Vec<_> = vals.iter().map(|v| frame(v)).collect();
            let cfg = DissimilarConfig { history: h, min_diff: floor, metric: DistanceMetric::L1 };
            let out = dissimilar_sample(&states, &cfg).unwrap();
            prop_assert_eq!(&out[0], &states[0]);
            let mut it = states.iter();
            for s in &out {
                prop_assert!(it.any(|x| x == s));
            }
        }

        #[test]
        fn streaming_matches_batch_for_every_prefix(
            vals in proptest::collection::vec(proptest::collection::vec(0u8..6, 2), 1..25),
            h in 1usize..5,
        ) {
            let states: Vec<_> = vals.iter().map(|v| frame(v)).collect();
            let cfg = DissimilarConfig { history: h, min_diff: 1.0, metric: DistanceMetric::L1 };
            let mut rebuilt = Vec::new();
            for n in 0..states.len() {
                if should_reward(&states[..n], &states[n], &cfg).unwrap() {
                    rebuilt.push(states[n].clone());
                }
                prop_assert_eq!(&rebuilt, &dissimilar_sample(&states[..=n], &cfg).unwrap());
            }
        }

        #[test]
        fn sampler_matches_batch(
            vals in proptest::collection::vec(proptest::collection::vec(0u8..6, 2), 1..40),
            h in 1usize..6,
            floor in 0.0f64..3.0,
        ) {
            let states: Vec<_> = vals.iter().map(|v| frame(v)).collect();
            let cfg = DissimilarConfig { history: h, min_diff: floor, metric: DistanceMetric::L2 };
            let mut sampler = DissimilarSampler::new(cfg);
            for s in &states {
                sampler.push(s).unwrap();
            }
            prop_assert_eq!(sampler.kept(), &dissimilar_sample(&states, &cfg).unwrap()[..]);
        }

        #[test]
        fn discrete_sampler_matches_first_visit(ids in proptest::collection::vec(0u32..6, 1..50)) {
            let states: Vec<_> = ids.into_iter().map(d).collect();
            let mut sampler = DissimilarSampler::new(DissimilarConfig::default());
            for s in &states {
                sampler.push(s).unwrap();
            }
            prop_assert_eq!(sampler.take(), first_visit_sample(&states));
            prop_assert!(sampler.kept().is_empty());
        }
    }
}
