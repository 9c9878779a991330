//! Tabular Double Q-learning with a mixed Monte Carlo target, and the
//! training loop that adds exploration and micro-objective rewards.

mod learner;
mod qtable;
mod replay;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use learner::{Agent, BonusEvent, EpisodeOutcome, StoredStep};
pub use qtable::{ActionValues, DoubleQ, QTable};
pub use replay::ReplayMemory;

use crate::density::{DensityModel, FactoredPixelModel, TabularCountModel};
use crate::error::{Error, Result};
use crate::types::{Observation, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AgentMode {
    #[default]
    Baseline,
    Psc,
    Mol,
    PscMol,
}

impl AgentMode {
    pub fn uses_psc(self) -> bool {
        matches!(self, AgentMode::Psc | AgentMode::PscMol)
    }

    pub fn uses_mol(self) -> bool {
        matches!(self, AgentMode::Mol | AgentMode::PscMol)
    }
}

impl FromStr for AgentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(AgentMode::Baseline),
            "psc" => Ok(AgentMode::Psc),
            "mol" => Ok(AgentMode::Mol),
            "psc+mol" => Ok(AgentMode::PscMol),
            other => Err(Error::config(
                "mode",
                format!("unknown mode `{other}` (expected baseline, psc, mol or psc+mol)"),
            )),
        }
    }
}

impl fmt::Display for AgentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentMode::Baseline => "baseline",
            AgentMode::Psc => "psc",
            AgentMode::Mol => "mol",
            AgentMode::PscMol => "psc+mol",
        })
    }
}

/// Density model family used for both the exploration and importance counts.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum DensityKind {
    #[default]
    Tabular,
    FactoredPixels {
        smoothing: f64,
    },
}

impl DensityKind {
    /// Fresh, empty model of this kind.
    pub fn build(self) -> Box<dyn DensityModel + Send> {
        match self {
            DensityKind::Tabular => Box::new(TabularCountModel::new()),
            DensityKind::FactoredPixels { smoothing } => {
                Box::new(FactoredPixelModel::new(smoothing).unwrap_or_default())
            }
        }
    }
}

/// Linear decay from `start` to `end` over `decay_steps` frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn at(&self, frame: u64) -> f64 {
        if self.decay_steps == 0 || frame >= self.decay_steps {
            return self.end;
        }
        let t = frame as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub mode: AgentMode,
    /// Weight of the Monte Carlo error in the mixed update.
    pub eta: f64,
    pub epsilon: EpsilonSchedule,
    pub learning_rate: f64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub updates_per_step: usize,
    pub density: DensityKind,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            mode: AgentMode::Baseline,
            eta: 0.1,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.05,
                decay_steps: 50_000,
            },
            learning_rate: 0.1,
            gamma: 0.99,
            replay_capacity: 50_000,
            batch_size: 8,
            updates_per_step: 1,
            density: DensityKind::Tabular,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::config("eta", "must lie in [0, 1]"));
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) {
            return Err(Error::config("epsilon_start", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&e.end) {
            return Err(Error::config("epsilon_end", "must lie in [0, 1]"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("learning_rate", "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1)"));
        }
        if self.replay_capacity == 0 {
            return Err(Error::config("replay_capacity", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if let DensityKind::FactoredPixels { smoothing } = self.density {
            if !(smoothing > 0.0) {
                return Err(Error::config("smoothing", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Uniform action with probability `epsilon`, else the greedy action.
///
/// Always draws the same number of random values regardless of outcome so
/// runs that differ only in rewards consume identical random streams.
pub fn epsilon_greedy<Q, R>(q: &Q, s: &Observation, epsilon: f64, rng: &mut R) -> usize
where
    Q: ActionValues + ?Sized,
    R: Rng + ?Sized,
{
    let explore = rng.gen::<f64>() < epsilon;
    let random = rng.gen_range(0..q.n_actions());
    if explore {
        random
    } else {
        q.greedy(s)
    }
}

/// `r + γ · Q_b(s′, argmax_a Q_a(s′, a))`, without bootstrap on terminal steps.
pub fn double_q_target(q_a: &QTable, q_b: &QTable, t: &Transition) -> f64 {
    if t.terminal {
        return t.reward;
    }
    let best = q_a.greedy(&t.next_state);
    t.reward + q_a.discount * q_b.get(&t.next_state, best)
}

/// Discounted sum of rewards from the start of `tail` to its end.
pub fn monte_carlo_return(tail: &[Transition], gamma: f64) -> f64 {
    tail.iter().rev().fold(0.0, |acc, t| t.reward + gamma * acc)
}

/// Mixed error for one stored step with a precomputed return.
pub fn mixed_error(q_a: &QTable, q_b: &QTable, t: &Transition, mc_return: f64, eta: f64) -> f64 {
    let current = q_a.get(&t.state, t.action);
    let td = double_q_target(q_a, q_b, t) - current;
    let mc = mc_return - current;
    (1.0 - eta) * td + eta * mc
}

/// `(1 − η)·ΔQ_double + η·(G − Q(x_t, a_t))` for the first step of `tail`,
/// where `G` is the discounted return of the whole tail. The caller scales
/// by the learning rate when applying it.
pub fn mixed_mc_update(q_a: &QTable, q_b: &QTable, tail: &[Transition], eta: f64) -> f64 {
    let Some(first) = tail.first() else {
        return 0.0;
    };
    mixed_error(q_a, q_b, first, monte_carlo_return(tail, q_a.discount), eta)
}
