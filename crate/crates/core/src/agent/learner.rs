use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{epsilon_greedy, mixed_error, AgentConfig, DoubleQ, ReplayMemory};
use crate::density::{observe_and_count, DensityModel};
use crate::error::Result;
use crate::sampling::{DissimilarConfig, DissimilarSampler};
use crate::shaping::{psc_bonus, r_exp, r_obj, CMaxTracker, ShapingConfig};
use crate::types::{
    split_successful, Environment, Observation, SuccessfulTrajectory, Trajectory, Transition,
};

/// A replayed step: the transition with its shaped reward and the
/// discounted shaped return from that step to the end of its episode.
#[derive(Clone, Debug)]
pub struct StoredStep {
    pub transition: Transition,
    pub mc_return: f64,
}

/// One micro-objective reward grant.
#[derive(Clone, Debug, PartialEq)]
pub struct BonusEvent {
    /// Goals reached by the agent before this grant; grants with equal
    /// values belong to the same running segment.
    pub segment: usize,
    pub step: usize,
    pub state: Observation,
    pub pseudo_count: f64,
    pub reward: f64,
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    /// Transitions with external rewards.
    pub transitions: Vec<Transition>,
    /// Shaped reward per transition.
    pub shaped_rewards: Vec<f64>,
    pub successes: Vec<SuccessfulTrajectory>,
    pub bonuses: Vec<BonusEvent>,
    pub score: f64,
    pub shaped_return: f64,
    /// Exploration rate at the last step of the episode.
    pub epsilon: f64,
    /// Whether the environment reported the task complete at episode end.
    pub goal_reached: bool,
    /// Cumulative frames after this episode.
    pub frames: u64,
}

/// One training run: value tables, replay memory, the exploration count
/// model, and the importance model that only sees sampled states of
/// successful trajectories.
pub struct Agent {
    cfg: AgentConfig,
    shaping: ShapingConfig,
    sampling: DissimilarConfig,
    q: DoubleQ,
    replay: ReplayMemory<StoredStep>,
    exploration: Box<dyn DensityModel + Send>,
    importance: Box<dyn DensityModel + Send>,
    importance_log: Vec<Observation>,
    tracker: CMaxTracker,
    sampler: DissimilarSampler,
    rng: ChaCha8Rng,
    frames: u64,
    goals: usize,
}

impl Agent {
    pub fn new(
        cfg: AgentConfig,
        shaping: ShapingConfig,
        sampling: DissimilarConfig,
        n_actions: usize,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        shaping.validate()?;
        sampling.validate()?;
        Ok(Self {
            q: DoubleQ::new(n_actions, cfg.learning_rate, cfg.gamma),
            replay: ReplayMemory::new(cfg.replay_capacity),
            exploration: cfg.density.build(),
            importance: cfg.density.build(),
            importance_log: Vec::new(),
            tracker: CMaxTracker::new(),
            sampler: DissimilarSampler::new(sampling),
            rng: ChaCha8Rng::seed_from_u64(seed),
            frames: 0,
            goals: 0,
            cfg,
            shaping,
            sampling,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn q(&self) -> &DoubleQ {
        &self.q
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    /// Positive-reward steps seen so far.
    pub fn goals(&self) -> usize {
        self.goals
    }

    pub fn tracker(&self) -> CMaxTracker {
        self.tracker
    }

    pub fn importance_model(&self) -> &dyn DensityModel {
        self.importance.as_ref()
    }

    /// Every state the importance model was updated with, in order.
    pub fn importance_log(&self) -> &[Observation] {
        &self.importance_log
    }

    pub fn sampling(&self) -> &DissimilarConfig {
        &self.sampling
    }

    pub fn shaping(&self) -> &ShapingConfig {
        &self.shaping
    }

    fn learn_from_replay(&mut self) {
        if self.replay.len() < self.cfg.batch_size {
            return;
        }
        let eta = self.cfg.eta;
        for _ in 0..self.cfg.updates_per_step * self.cfg.batch_size {
            let step = self
                .replay
                .sample(&mut self.rng)
                .expect("replay is nonempty");
            let swap = self.rng.gen::<bool>();
            let (online, target) = self.q.pair_mut(swap);
            let err = mixed_error(online, target, &step.transition, step.mc_return, eta);
            online.apply(&step.transition.state, step.transition.action, err);
        }
    }

    /// Plays one episode with learning.
    ///
    /// Each step: pick an ε-greedy action, learn from replay, then shape the
    /// external reward. With exploration enabled every next state is
    /// counted and earns `β(N̂+0.01)^(-1/2)`. With micro-objectives enabled
    /// the next state is fed to the dissimilar sampler of the running
    /// segment; if kept it earns `R_obj` from its importance count. A
    /// positive external reward closes the segment: the importance model is
    /// updated with the kept states and the sampler restarts. Segments span
    /// episode boundaries, so a state earns `R_obj` at most once between two
    /// goals. Shaped steps enter replay with their returns once the episode
    /// ends.
    pub fn run_episode<E: Environment + ?Sized>(
        &mut self,
        env: &mut E,
        env_seed: u64,
    ) -> Result<EpisodeOutcome> {
        let mut obs = env.reset(env_seed);
        let mut transitions = Vec::new();
        let mut shaped_rewards = Vec::new();
        let mut bonuses = Vec::new();
        let mut epsilon;

        loop {
            epsilon = self.cfg.epsilon.at(self.frames);
            let action = epsilon_greedy(&self.q, &obs, epsilon, &mut self.rng);
            let t = env.step(action)?;
            self.frames += 1;
            self.learn_from_replay();

            let mut shaped = t.reward;
            if self.cfg.mode.uses_psc() {
                let n = observe_and_count(self.exploration.as_mut(), &t.next_state);
                shaped += psc_bonus(n, self.shaping.beta);
            }
            if self.cfg.mode.uses_mol() {
                if self.sampler.push(&t.next_state)? {
                    let n = self.importance.pseudo_count(&t.next_state);
                    let bonus = r_obj(r_exp(n), &mut self.tracker, &self.shaping);
                    shaped += bonus;
                    bonuses.push(BonusEvent {
                        segment: self.goals,
                        step: transitions.len(),
                        state: t.next_state.clone(),
                        pseudo_count: n,
                        reward: bonus,
                    });
                }
                if t.reward > 0.0 {
                    for s in self.sampler.take() {
                        self.importance.update(&s);
                        self.importance_log.push(s);
                    }
                }
            }
            if t.reward > 0.0 {
                self.goals += 1;
            }

            obs = t.next_state.clone();
            let done = t.terminal;
            shaped_rewards.push(shaped);
            transitions.push(t);
            if done {
                break;
            }
        }

        let mut ret = 0.0;
        let mut returns = vec![0.0; transitions.len()];
        for i in (0..transitions.len()).rev() {
            ret = shaped_rewards[i] + self.cfg.gamma * ret;
            returns[i] = ret;
        }
        for ((t, &r), g) in transitions.iter().zip(&shaped_rewards).zip(returns) {
            let mut stored = t.clone();
            stored.reward = r;
            self.replay.push(StoredStep {
                transition: stored,
                mc_return: g,
            });
        }

        let goal_reached = env.task_complete();
        let score = transitions.iter().map(|t| t.reward).sum();
        let shaped_return = shaped_rewards.iter().sum();
        let successes = split_successful(&Trajectory::new(transitions.clone())?);
        Ok(EpisodeOutcome {
            transitions,
            shaped_rewards,
            successes,
            bonuses,
            score,
            shaped_return,
            epsilon,
            goal_reached,
            frames: self.frames,
        })
    }
}
