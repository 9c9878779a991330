use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::render::{render_pixels, EntityKind, GridScene, PixelRenderSpec};
use super::{apply_move, check_cell, grid_distance, Cell, Move};
use crate::error::{Error, Result};
use crate::types::{Environment, Observation, Transition};

/// Two-reward sparse world: pick up the key, then enter the door.
///
/// The door pays once, only while the key is held. Hazard cells end the
/// episode with no reward.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyDoorSpec {
    pub width: u32,
    pub height: u32,
    pub walls: BTreeSet<Cell>,
    pub hazards: BTreeSet<Cell>,
    pub start: Cell,
    pub key: Cell,
    pub door: Cell,
    pub step_reward: f64,
    pub key_reward: f64,
    pub door_reward: f64,
    pub slip_prob: f64,
    pub max_steps: usize,
    /// When false the episode runs on after the door opens until `max_steps`.
    pub door_ends_episode: bool,
}

/// How far through the task an episode is; part of the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Progress {
    NoKey = 0,
    HasKey = 1,
    DoorOpen = 2,
}

impl Default for KeyDoorSpec {
    /// 10x10 two-room layout split by a wall at `x = 5` with a gap at
    /// `(5, 4)`; the key sits in the left room, the door in the right.
    fn default() -> Self {
        let walls = (0..10)
            .filter(|&y| y != 4)
            .map(|y| Cell::new(5, y))
            .collect();
        Self {
            width: 10,
            height: 10,
            walls,
            hazards: BTreeSet::new(),
            start: Cell::new(0, 0),
            key: Cell::new(1, 8),
            door: Cell::new(8, 1),
            step_reward: 0.0,
            key_reward: 1.0,
            door_reward: 1.0,
            slip_prob: 0.0,
            max_steps: 200,
            door_ends_episode: true,
        }
    }
}

impl KeyDoorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec(
                "grid dimensions must be positive".into(),
            ));
        }
        for (name, cell) in [
            ("start", self.start),
            ("key", self.key),
            ("door", self.door),
        ] {
            check_cell(name, cell, self.width, self.height)?;
            if self.walls.contains(&cell) {
                return Err(Error::InvalidSpec(format!("{name} {cell} is a wall")));
            }
            if self.hazards.contains(&cell) {
                return Err(Error::InvalidSpec(format!("{name} {cell} is a hazard")));
            }
        }
        for &cell in self.walls.iter().chain(&self.hazards) {
            check_cell("wall/hazard", cell, self.width, self.height)?;
        }
        if self.start == self.key || self.start == self.door || self.key == self.door {
            return Err(Error::InvalidSpec(
                "start, key and door must be distinct".into(),
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
        if [self.step_reward, self.key_reward, self.door_reward]
            .iter()
            .any(|r| !r.is_finite())
        {
            return Err(Error::InvalidSpec("rewards must be finite".into()));
        }
        let blocked: BTreeSet<Cell> = self.walls.union(&self.hazards).copied().collect();
        let reach = |a, b| grid_distance(a, b, self.width, self.height, &blocked);
        if reach(self.start, self.key).is_none() || reach(self.key, self.door).is_none() {
            return Err(Error::InvalidSpec(
                "no hazard-free path start -> key -> door".into(),
            ));
        }
        Ok(())
    }

    /// Move count of the shortest start -> key -> door route.
    pub fn optimal_steps(&self) -> Option<usize> {
        let blocked: BTreeSet<Cell> = self.walls.union(&self.hazards).copied().collect();
        let a = grid_distance(self.start, self.key, self.width, self.height, &blocked)?;
        let b = grid_distance(self.key, self.door, self.width, self.height, &blocked)?;
        Some(a + b)
    }
}

#[derive(Clone, Debug)]
pub struct KeyDoor {
    spec: KeyDoorSpec,
    render: Option<PixelRenderSpec>,
    agent: Cell,
    progress: Progress,
    steps: usize,
    terminal: bool,
    rng: ChaCha8Rng,
}

impl KeyDoor {
    pub fn new(spec: KeyDoorSpec) -> Result<Self> {
        spec.validate()?;
        let agent = spec.start;
        Ok(Self {
            spec,
            render: None,
            agent,
            progress: Progress::NoKey,
            steps: 0,
            terminal: false,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn with_pixels(mut self, render: PixelRenderSpec) -> Result<Self> {
        render.validate()?;
        self.render = Some(render);
        Ok(self)
    }

    pub fn spec(&self) -> &KeyDoorSpec {
        &self.spec
    }

    pub fn progress(&self) -> Progress {
        self.progress
    }

    pub fn has_key(&self) -> bool {
        self.progress != Progress::NoKey
    }

    /// Discrete id: cell index plus `width * height` per progress stage.
    pub fn state_id(&self, cell: Cell, progress: Progress) -> u32 {
        let cells = self.spec.width * self.spec.height;
        cell.index(self.spec.width) + cells * progress as u32
    }

    /// Observation the agent sees standing at `cell` at the given stage.
    pub fn observation_of(&self, cell: Cell, progress: Progress) -> Observation {
        match &self.render {
            None => Observation::Discrete(self.state_id(cell, progress)),
            Some(spec) => {
                let view = View {
                    world: self,
                    agent: cell,
                    progress,
                };
                render_pixels(&view, spec)
            }
        }
    }

    fn background(&self, cell: Cell, progress: Progress) -> EntityKind {
        if self.spec.walls.contains(&cell) {
            EntityKind::Wall
        } else if self.spec.hazards.contains(&cell) {
            EntityKind::Hazard
        } else if cell == self.spec.door && progress != Progress::DoorOpen {
            EntityKind::Door
        } else if cell == self.spec.key && progress == Progress::NoKey {
            EntityKind::Key
        } else {
            EntityKind::Floor
        }
    }
}

struct View<'a> {
    world: &'a KeyDoor,
    agent: Cell,
    progress: Progress,
}

impl GridScene for View<'_> {
    fn grid_size(&self) -> (u32, u32) {
        (self.world.spec.width, self.world.spec.height)
    }

    fn entity_at(&self, cell: Cell) -> EntityKind {
        self.world.background(cell, self.progress)
    }

    fn agent_cell(&self) -> Cell {
        self.agent
    }
}

impl GridScene for KeyDoor {
    fn grid_size(&self) -> (u32, u32) {
        (self.spec.width, self.spec.height)
    }

    fn entity_at(&self, cell: Cell) -> EntityKind {
        self.background(cell, self.progress)
    }

    fn agent_cell(&self) -> Cell {
        self.agent
    }
}

impl Environment for KeyDoor {
    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.agent = self.spec.start;
        self.progress = Progress::NoKey;
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

        let mut reward = self.spec.step_reward;
        let mut done = false;
        if self.spec.hazards.contains(&self.agent) {
            reward = 0.0;
            done = true;
        } else if self.agent == self.spec.key && self.progress == Progress::NoKey {
            self.progress = Progress::HasKey;
            reward = self.spec.key_reward;
        } else if self.agent == self.spec.door && self.progress == Progress::HasKey {
            self.progress = Progress::DoorOpen;
            reward = self.spec.door_reward;
            done = self.spec.door_ends_episode;
        }
        self.terminal = done || self.steps >= self.spec.max_steps;
        Ok(Transition::new(
            state,
            action,
            self.current_observation(),
            reward,
            self.terminal,
        ))
    }

    fn current_observation(&self) -> Observation {
        self.observation_of(self.agent, self.progress)
    }

    fn action_count(&self) -> usize {
        Move::COUNT
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }

    fn task_complete(&self) -> bool {
        self.progress == Progress::DoorOpen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Move::*;

    fn walk(env: &mut KeyDoor, moves: &[Move]) -> Vec<Transition> {
        let mut out = Vec::new();
        for mv in moves {
            if env.is_terminal() {
                break;
            }
            out.push(env.step(mv.id()).unwrap());
        }
        out
    }

    fn start_to_key() -> Vec<Move> {
        let mut m = vec![Right];
        m.extend(std::iter::repeat(Down).take(8));
        m
    }

    fn key_to_door() -> Vec<Move> {
        let mut m = vec![Up, Up, Up, Up];
        m.extend(std::iter::repeat(Right).take(7));
        m.extend([Up, Up, Up]);
        m
    }

    #[test]
    fn default_layout_is_valid() {
        let spec = KeyDoorSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.optimal_steps(), Some(23));
    }

    #[test]
    fn key_then_door_pays_both_rewards() {
        let spec = KeyDoorSpec::default();
        let mut env = KeyDoor::new(spec.clone()).unwrap();
        env.reset(0);
        let mut moves = start_to_key();
        moves.extend(key_to_door());
        let ts = walk(&mut env, &moves);
        let total: f64 = ts.iter().map(|t| t.reward).sum();
        assert_eq!(total, spec.key_reward + spec.door_reward);
        assert_eq!(ts.len(), 23);
        assert!(ts.last().unwrap().terminal);
    }

    #[test]
    fn open_door_can_continue_the_episode() {
        let spec = KeyDoorSpec {
            door_ends_episode: false,
            ..KeyDoorSpec::default()
        };
        let mut env = KeyDoor::new(spec).unwrap();
        env.reset(0);
        let mut moves = start_to_key();
        moves.extend(key_to_door());
        moves.extend([Down, Up, Down, Up]);
        let ts = walk(&mut env, &moves);
        assert_eq!(ts.len(), 27);
        assert_eq!(ts.iter().map(|t| t.reward).sum::<f64>(), 2.0);
        assert!(env.task_complete());
        assert!(!env.is_terminal());
        assert_eq!(
            env.current_observation(),
            env.observation_of(Cell::new(8, 1), Progress::DoorOpen)
        );
    }

    #[test]
    fn door_without_key_pays_nothing() {
        let mut env = KeyDoor::new(KeyDoorSpec::default()).unwrap();
        env.reset(0);
        let mut moves = vec![Down; 4];
        moves.extend(std::iter::repeat(Right).take(8));
        moves.extend([Up, Up, Up]);
        let ts = walk(&mut env, &moves);
        assert_eq!(
            ts.last().unwrap().next_state,
            env.observation_of(Cell::new(8, 1), Progress::NoKey)
        );
        assert!(ts.iter().all(|t| t.reward == 0.0));
        assert!(!env.is_terminal());
    }

    #[test]
    fn key_rewards_once() {
        let mut env = KeyDoor::new(KeyDoorSpec::default()).unwrap();
        env.reset(0);
        let mut moves = start_to_key();
        moves.extend([Up, Down, Up, Down]);
        let total: f64 = walk(&mut env, &moves).iter().map(|t| t.reward).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn episode_cap_terminates() {
        let spec = KeyDoorSpec {
            max_steps: 5,
            ..KeyDoorSpec::default()
        };
        let mut env = KeyDoor::new(spec).unwrap();
        env.reset(0);
        let ts = walk(&mut env, &[Up; 10]);
        assert_eq!(ts.len(), 5);
        assert!(ts[4].terminal);
        assert!(matches!(env.step(0), Err(Error::TerminalStep)));
    }

    #[test]
    fn hazard_terminates_with_zero() {
        let mut spec = KeyDoorSpec::default();
        spec.hazards.insert(Cell::new(1, 0));
        let mut env = KeyDoor::new(spec).unwrap();
        env.reset(0);
        let t = env.step(Right.id()).unwrap();
        assert!(t.terminal);
        assert_eq!(t.reward, 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = KeyDoorSpec::default();
        spec.key = spec.door;
        assert!(KeyDoor::new(spec).is_err());

        let mut spec = KeyDoorSpec::default();
        spec.walls.insert(Cell::new(5, 4));
        assert!(KeyDoor::new(spec).is_err());

        let mut spec = KeyDoorSpec::default();
        spec.hazards.insert(spec.key);
        assert!(KeyDoor::new(spec).is_err());
    }

    #[test]
    fn key_flag_is_part_of_the_state() {
        let env = KeyDoor::new(KeyDoorSpec::default()).unwrap();
        let c = Cell::new(3, 3);
        let all = [Progress::NoKey, Progress::HasKey, Progress::DoorOpen];
        let ids: BTreeSet<_> = all.iter().map(|&p| env.observation_of(c, p)).collect();
        assert_eq!(ids.len(), 3);
        let env = env.with_pixels(PixelRenderSpec::with_cell_size(2)).unwrap();
        let frames: BTreeSet<_> = all.iter().map(|&p| env.observation_of(c, p)).collect();
        assert_eq!(frames.len(), 3);
    }
}
