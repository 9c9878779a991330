//! Domain types shared by every module: observations, transitions,
//! trajectories, finite MDPs and the environment contract.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A row-major grid of 8-bit intensities.
///
/// The backing buffer is reference counted so observations can be cloned
/// into replay memory and sampled trajectories without copying pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelGrid {
    width: u32,
    height: u32,
    values: Arc<[u8]>,
}

impl PixelGrid {
    pub fn new(width: u32, height: u32, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidObservation(format!(
                "pixel grid dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::InvalidObservation(format!(
                "pixel grid {width}x{height} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values: values.into(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.values[(y * self.width + x) as usize]
    }
}

/// An environment state as seen by the agent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observation {
    Discrete(u32),
    Pixels(PixelGrid),
}

impl Observation {
    pub fn pixels(width: u32, height: u32, values: Vec<u8>) -> Result<Self> {
        PixelGrid::new(width, height, values).map(Observation::Pixels)
    }

    pub fn as_discrete(&self) -> Option<u32> {
        match self {
            Observation::Discrete(id) => Some(*id),
            Observation::Pixels(_) => None,
        }
    }

    pub fn as_pixels(&self) -> Option<&PixelGrid> {
        match self {
            Observation::Pixels(grid) => Some(grid),
            Observation::Discrete(_) => None,
        }
    }
}

/// Compact textual key: `d<id>` or `p<w>x<h>:<hex>`.
impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::Discrete(id) => write!(f, "d{id}"),
            Observation::Pixels(grid) => write!(
                f,
                "p{}x{}:{}",
                grid.width,
                grid.height,
                hex::encode(grid.values())
            ),
        }
    }
}

impl FromStr for Observation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidObservation(format!("cannot parse observation key `{s}`"));
        if let Some(id) = s.strip_prefix('d') {
            return id.parse().map(Observation::Discrete).map_err(|_| bad());
        }
        let body = s.strip_prefix('p').ok_or_else(bad)?;
        let (dims, data) = body.split_once(':').ok_or_else(bad)?;
        let (w, h) = dims.split_once('x').ok_or_else(bad)?;
        let width = w.parse().map_err(|_| bad())?;
        let height = h.parse().map_err(|_| bad())?;
        let values = hex::decode(data).map_err(|_| bad())?;
        Observation::pixels(width, height, values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub action: usize,
    pub next_state: Observation,
    pub reward: f64,
    pub terminal: bool,
}

impl Transition {
    pub fn new(
        state: Observation,
        action: usize,
        next_state: Observation,
        reward: f64,
        terminal: bool,
    ) -> Self {
        Self {
            state,
            action,
            next_state,
            reward,
            terminal,
        }
    }
}

/// An ordered sequence of chained transitions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new(transitions: Vec<Transition>) -> Result<Self> {
        for (i, t) in transitions.iter().enumerate() {
            if !t.reward.is_finite() {
                return Err(Error::InvalidTrajectory(format!(
                    "transition {i} has non-finite reward {}",
                    t.reward
                )));
            }
        }
        for (i, pair) in transitions.windows(2).enumerate() {
            if pair[0].next_state != pair[1].state {
                return Err(Error::InvalidTrajectory(format!(
                    "transition {} does not start where transition {i} ended",
                    i + 1
                )));
            }
        }
        Ok(Self { transitions })
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Visited states `s_0, s_1, ..., s_n`; empty for an empty trajectory.
    pub fn states(&self) -> Vec<Observation> {
        let Some(first) = self.transitions.first() else {
            return Vec::new();
        };
        std::iter::once(first.state.clone())
            .chain(self.transitions.iter().map(|t| t.next_state.clone()))
            .collect()
    }

    pub fn into_transitions(self) -> Vec<Transition> {
        self.transitions
    }
}

/// A trajectory whose last transition is its only positive-reward transition.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessfulTrajectory {
    trajectory: Trajectory,
}

impl SuccessfulTrajectory {
    pub fn new(trajectory: Trajectory) -> Result<Self> {
        let positives: Vec<usize> = trajectory
            .transitions()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.reward > 0.0)
            .map(|(i, _)| i)
            .collect();
        match positives.as_slice() {
            [only] if *only + 1 == trajectory.len() => Ok(Self { trajectory }),
            [] => Err(Error::InvalidTrajectory(
                "successful trajectory has no positive reward".into(),
            )),
            _ => Err(Error::InvalidTrajectory(format!(
                "successful trajectory needs exactly one positive reward at the end, found them at {positives:?}"
            ))),
        }
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn transitions(&self) -> &[Transition] {
        self.trajectory.transitions()
    }

    pub fn states(&self) -> Vec<Observation> {
        self.trajectory.states()
    }

    pub fn start(&self) -> &Observation {
        &self.trajectory.transitions()[0].state
    }

    pub fn goal(&self) -> &Observation {
        &self.trajectory.transitions()[self.trajectory.len() - 1].next_state
    }

    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Splits an episode after every positive-reward transition. A trailing
/// segment without a positive reward is dropped.
pub fn split_successful(episode: &Trajectory) -> Vec<SuccessfulTrajectory> {
    let mut out = Vec::new();
    let mut segment = Vec::new();
    for t in episode.transitions() {
        let goal = t.reward > 0.0;
        segment.push(t.clone());
        if goal {
            let traj = Trajectory {
                transitions: std::mem::take(&mut segment),
            };
            out.push(SuccessfulTrajectory { trajectory: traj });
        }
    }
    out
}

/// A finite MDP in dense tabular form.
///
/// `transition[(s * A + a) * S + s']` holds `P(s' | s, a)`, and `reward`
/// uses the same layout for `R(s, a, s')`.
#[derive(Clone, Debug)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    initial: Vec<f64>,
    discount: f64,
}

impl Mdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let table = n_states * n_actions * n_states;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp(
                "state and action sets must be nonempty".into(),
            ));
        }
        if transition.len() != table || reward.len() != table {
            return Err(Error::InvalidMdp(format!(
                "transition/reward tables must have {table} entries"
            )));
        }
        if initial.len() != n_states {
            return Err(Error::InvalidMdp(format!(
                "initial distribution must have {n_states} entries"
            )));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!(
                "discount {discount} not in [0, 1)"
            )));
        }
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &transition[(s * n_actions + a) * n_states..][..n_states];
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::InvalidMdp(format!(
                        "row ({s}, {a}) has entries outside [0, 1]"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidMdp(format!("row ({s}, {a}) sums to {sum}")));
                }
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidMdp("rewards must be finite".into()));
        }
        let init_sum: f64 = initial.iter().sum();
        if initial.iter().any(|p| *p < 0.0) || (init_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMdp(format!(
                "initial distribution sums to {init_sum}"
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            initial,
            discount,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        &self.transition[(s * self.n_actions + a) * self.n_states..][..self.n_states]
    }

    /// Successors with nonzero probability, in ascending state order.
    pub fn successors(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(s, a)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(n, p)| (n, *p))
    }
}

/// Single-owner environment state machine.
pub trait Environment {
    /// Starts a new episode; identical seeds replay identical dynamics.
    fn reset(&mut self, seed: u64) -> Observation;

    /// Advances by one action. Stepping a terminal environment is an error.
    fn step(&mut self, action: usize) -> Result<Transition>;

    fn current_observation(&self) -> Observation;

    fn action_count(&self) -> usize;

    fn is_terminal(&self) -> bool;

    /// Whether the current episode has accomplished the task.
    fn task_complete(&self) -> bool;
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn reset(&mut self, seed: u64) -> Observation {
        (**self).reset(seed)
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        (**self).step(action)
    }

    fn current_observation(&self) -> Observation {
        (**self).current_observation()
    }

    fn task_complete(&self) -> bool {
        (**self).task_complete()
    }

    fn action_count(&self) -> usize {
        (**self).action_count()
    }

    fn is_terminal(&self) -> bool {
        (**self).is_terminal()
    }
}
