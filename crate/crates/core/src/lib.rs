//! Micro-objective learning for tabular reinforcement learning.
//!
//! Counts how often states lie on the optimal paths of successful
//! trajectories, turns those counts into a bounded reward bonus, and trains
//! a Double Q-learning agent with the shaped reward. Environments, density
//! models, dissimilar state sampling, exact importance enumeration and an
//! experiment harness are included.

pub mod agent;
pub mod density;
pub mod envs;
pub mod error;
pub mod harness;
pub mod importance;
pub mod sampling;
pub mod shaping;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    split_successful, Environment, Mdp, Observation, PixelGrid, SuccessfulTrajectory, Trajectory,
    Transition,
};
