use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::{render_pixels, EntityKind, GridScene, PixelRenderSpec};
use super::{apply_move, check_cell, grid_distance, Cell, Move};
use crate::error::{Error, Result};
use crate::types::{Environment, Observation, Transition};

#[derive(Clone, Debug, PartialEq)]
pub struct GridWorldSpec {
    pub width: u32,
    pub height: u32,
    pub walls: BTreeSet<Cell>,
    pub start: Cell,
    pub goal: Cell,
    pub step_reward: f64,
    pub goal_reward: f64,
    /// Probability that a uniformly random move replaces the chosen one.
    pub slip_prob: f64,
    pub max_steps: usize,
}

impl GridWorldSpec {
    /// Open grid with start in the top-left and goal in the bottom-right.
    pub fn open(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            walls: BTreeSet::new(),
            start: Cell::new(0, 0),
            goal: Cell::new(width.saturating_sub(1), height.saturating_sub(1)),
            step_reward: 0.0,
            goal_reward: 1.0,
            slip_prob: 0.0,
            max_steps: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec(
                "grid dimensions must be positive".into(),
            ));
        }
        check_cell("start", self.start, self.width, self.height)?;
        check_cell("goal", self.goal, self.width, self.height)?;
        for &wall in &self.walls {
            check_cell("wall", wall, self.width, self.height)?;
        }
        if self.start == self.goal {
            return Err(Error::InvalidSpec("start and goal must differ".into()));
        }
        if self.walls.contains(&self.start) || self.walls.contains(&self.goal) {
            return Err(Error::InvalidSpec(
                "start and goal must not be walls".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.slip_prob) {
            return Err(Error::InvalidSpec(format!(
                "slip_prob {} not in [0, 1)",
                self.slip_prob
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidSpec("max_steps must be positive".into()));
        }
        if !self.step_reward.is_finite() || !self.goal_reward.is_finite() {
            return Err(Error::InvalidSpec("rewards must be finite".into()));
        }
        if grid_distance(self.start, self.goal, self.width, self.height, &self.walls).is_none() {
            return Err(Error::InvalidSpec("goal is unreachable from start".into()));
        }
        Ok(())
    }
}

/// Episodic grid world: reaching the goal pays `goal_reward` and terminates.
#[derive(Clone, Debug)]
pub struct GridWorld {
    spec: GridWorldSpec,
    render: Option<PixelRenderSpec>,
    agent: Cell,
    steps: usize,
    terminal: bool,
    rng: ChaCha8Rng,
}

impl GridWorld {
    pub fn new(spec: GridWorldSpec) -> Result<Self> {
        spec.validate()?;
        let agent = spec.start;
        Ok(Self {
            spec,
            render: None,
            agent,
            steps: 0,
            terminal: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    /// Emit pixel observations instead of discrete cell ids.
    pub fn with_pixels(mut self, render: PixelRenderSpec) -> Result<Self> {
        render.validate()?;
        self.render = Some(render);
        Ok(self)
    }

    pub fn spec(&self) -> &GridWorldSpec {
        &self.spec
    }

    pub fn state_count(&self) -> usize {
        (self.spec.width * self.spec.height) as usize
    }

    /// Teleports the agent; used by tests that start mid-grid.
    pub fn set_agent(&mut self, cell: Cell) -> Result<()> {
        check_cell("agent", cell, self.spec.width, self.spec.height)?;
        if self.spec.walls.contains(&cell) {
            return Err(Error::InvalidSpec(format!(
                "agent cannot stand on wall {cell}"
            )));
        }
        self.agent = cell;
        self.terminal = cell == self.spec.goal;
        Ok(())
    }

    pub fn observation_of(&self, cell: Cell) -> Observation {
        match &self.render {
            None => Observation::Discrete(cell.index(self.spec.width)),
            Some(spec) => {
                let view = AgentAt {
                    world: self,
                    agent: cell,
                };
                render_pixels(&view, spec)
            }
        }
    }
}

struct AgentAt<'a> {
    world: &'a GridWorld,
    agent: Cell,
}

impl GridScene for AgentAt<'_> {
    fn grid_size(&self) -> (u32, u32) {
        self.world.grid_size()
    }

    fn entity_at(&self, cell: Cell) -> EntityKind {
        self.world.entity_at(cell)
    }

    fn agent_cell(&self) -> Cell {
        self.agent
    }
}

impl GridScene for GridWorld {
    fn grid_size(&self) -> (u32, u32) {
        (self.spec.width, self.spec.height)
    }

    fn entity_at(&self, cell: Cell) -> EntityKind {
        if self.spec.walls.contains(&cell) {
            EntityKind::Wall
        } else if cell == self.spec.goal {
            EntityKind::Goal
        } else {
            EntityKind::Floor
        }
    }

    fn agent_cell(&self) -> Cell {
        self.agent
    }
}

impl Environment for GridWorld {
    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.agent = self.spec.start;
        self.steps = 0;
        self.terminal = false;
        self.current_observation()
    }

    fn step(&mut self, action: usize) -> Result<Transition> {
        if self.terminal {
            return Err(Error::TerminalStep);
        }
        let chosen = Move::from_id(action).ok_or(Error::InvalidAction {
            action,
            count: Move::COUNT,
        })?;
        let mv = if self.spec.slip_prob > 0.0 && self.rng.gen::<f64>() < self.spec.slip_prob {
            Move::ALL[self.rng.gen_range(0..Move::COUNT)]
        } else {
            chosen
        };
        let state = self.current_observation();
        self.agent = apply_move(
            self.agent,
            mv,
            self.spec.width,
            self.spec.height,
            &self.spec.walls,
        );
        self.steps += 1;
        let at_goal = self.agent == self.spec.goal;
        let reward = if at_goal {
            self.spec.goal_reward
        } else {
            self.spec.step_reward
        };
        self.terminal = at_goal || self.steps >= self.spec.max_steps;
        Ok(Transition::new(
            state,
            action,
            self.current_observation(),
            reward,
            self.terminal,
        ))
    }

    fn current_observation(&self) -> Observation {
        self.observation_of(self.agent)
    }

    fn action_count(&self) -> usize {
        Move::COUNT
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn task_complete(&self) -> bool {
        self.agent == self.spec.goal
    }
}

/// Deterministic 3x3 world: states `s_0..s_8` row-major, start `s_0`,
/// goal `s_8` paying 1.
pub fn make_fig1_gridworld() -> GridWorld {
    GridWorld::new(GridWorldSpec::open(3, 3)).expect("3x3 open grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(id: u32) -> Observation {
        Observation::Discrete(id)
    }

    #[test]
    fn fig1_first_and_goal_steps() {
        let mut env = make_fig1_gridworld();
        env.reset(0);
        let t = env.step(Move::Right.id()).unwrap();
        assert_eq!(t, Transition::new(d(0), Move::Right.id(), d(1), 0.0, false));

        env.set_agent(Cell::new(1, 2)).unwrap();
        let t = env.step(Move::Right.id()).unwrap();
        assert_eq!(t, Transition::new(d(7), Move::Right.id(), d(8), 1.0, true));
        assert!(matches!(env.step(0), Err(Error::TerminalStep)));
    }

    #[test]
    fn invalid_action_is_rejected() {
        let mut env = make_fig1_gridworld();
        env.reset(0);
        assert!(matches!(
            env.step(4),
            Err(Error::InvalidAction {
                action: 4,
                count: 4
            })
        ));
    }

    #[test]
    fn optimal_episode_takes_four_steps() {
        let mut env = make_fig1_gridworld();
        env.reset(0);
        assert_eq!(env.state_count(), 9);
        let mut total = 0.0;
        let mut steps = 0;
        for mv in [Move::Right, Move::Right, Move::Down, Move::Down] {
            let t = env.step(mv.id()).unwrap();
            total += t.reward;
            steps += 1;
            if t.terminal {
                break;
            }
        }
        assert_eq!(steps, 4);
        assert_eq!(total, 1.0);
        assert!(env.is_terminal());
    }

    #[test]
    fn edges_and_walls_are_no_ops() {
        let mut env = make_fig1_gridworld();
        env.reset(0);
        let t = env.step(Move::Up.id()).unwrap();
        assert_eq!(t.next_state, d(0));
        let mut spec = GridWorldSpec::open(3, 3);
        spec.walls.insert(Cell::new(1, 0));
        let mut env = GridWorld::new(spec).unwrap();
        env.reset(0);
        assert_eq!(env.step(Move::Right.id()).unwrap().next_state, d(0));
    }

    #[test]
    fn max_steps_terminates_without_reward() {
        let mut spec = GridWorldSpec::open(3, 3);
        spec.max_steps = 2;
        let mut env = GridWorld::new(spec).unwrap();
        env.reset(0);
        assert!(!env.step(Move::Up.id()).unwrap().terminal);
        let t = env.step(Move::Up.id()).unwrap();
        assert!(t.terminal);
        assert_eq!(t.reward, 0.0);
    }

    #[test]
    fn spec_validation() {
        let mut spec = GridWorldSpec::open(3, 3);
        spec.goal = spec.start;
        assert!(GridWorld::new(spec).is_err());

        let mut spec = GridWorldSpec::open(3, 3);
        spec.walls.extend([Cell::new(1, 2), Cell::new(2, 1)]);
        assert!(GridWorld::new(spec).is_err());

        let mut spec = GridWorldSpec::open(3, 3);
        spec.slip_prob = 1.0;
        assert!(GridWorld::new(spec).is_err());
    }

    #[test]
    fn slipping_is_seed_deterministic() {
        let mut spec = GridWorldSpec::open(5, 5);
        spec.slip_prob = 0.5;
        let run = |seed| {
            let mut env = GridWorld::new(spec.clone()).unwrap();
            env.reset(seed);
            (0..8)
                .map(|i| env.step(i % 4).unwrap().next_state)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
    }

    #[test]
    fn pixel_rendering_dimensions_and_move_distance() {
        let render = PixelRenderSpec::with_cell_size(4);
        let mut env = make_fig1_gridworld().with_pixels(render.clone()).unwrap();
        let first = env.reset(0);
        let grid = first.as_pixels().unwrap();
        assert_eq!((grid.width(), grid.height()), (12, 12));
        assert_eq!(env.current_observation(), first);

        let moved = env.step(Move::Right.id()).unwrap().next_state;
        let a = first.as_pixels().unwrap().values();
        let b = moved.as_pixels().unwrap().values();
        let l1: u32 = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y) as u32).sum();
        // Two cells of 16 pixels each flip between agent (255) and floor (0).
        assert_eq!(l1, 2 * 16 * 255);
        assert_eq!(f64::from(l1), render.agent_move_distance());
    }
}
