//! Desk-scale environments: the 3x3 grid world, the nine-state branching
//! MDP, and a key-door world, plus an optional pixel renderer.

mod fig2;
mod gridworld;
mod keydoor;
mod render;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

pub use fig2::{make_fig2_mdp, FIG2_EDGES, FIG2_GOAL};
pub use gridworld::{make_fig1_gridworld, GridWorld, GridWorldSpec};
pub use keydoor::{KeyDoor, KeyDoorSpec, Progress};
pub use render::{render_pixels, EntityKind, GridScene, PixelRenderSpec};

use crate::error::Error;

/// A grid cell; `y = 0` is the top row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn index(self, width: u32) -> u32 {
        self.y * width + self.x
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

impl FromStr for Cell {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidSpec(format!("cannot parse cell `{s}`, expected `x,y`"));
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        Ok(Cell::new(
            x.trim().parse().map_err(|_| bad())?,
            y.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// Grid moves, numbered as action ids 0..4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Move {
    pub const COUNT: usize = 4;
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }
}

/// Moves one cell; leaving the grid or entering a wall is a no-op.
pub(crate) fn apply_move(
    cell: Cell,
    mv: Move,
    width: u32,
    height: u32,
    walls: &BTreeSet<Cell>,
) -> Cell {
    let target = match mv {
        Move::Up if cell.y > 0 => Cell::new(cell.x, cell.y - 1),
        Move::Down if cell.y + 1 < height => Cell::new(cell.x, cell.y + 1),
        Move::Left if cell.x > 0 => Cell::new(cell.x - 1, cell.y),
        Move::Right if cell.x + 1 < width => Cell::new(cell.x + 1, cell.y),
        _ => cell,
    };
    if walls.contains(&target) {
        cell
    } else {
        target
    }
}

/// Shortest move count between two cells avoiding `blocked`, if reachable.
pub(crate) fn grid_distance(
    from: Cell,
    to: Cell,
    width: u32,
    height: u32,
    blocked: &BTreeSet<Cell>,
) -> Option<usize> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([(from, 0usize)]);
    while let Some((cell, d)) = queue.pop_front() {
        if cell == to {
            return Some(d);
        }
        for mv in Move::ALL {
            let next = apply_move(cell, mv, width, height, blocked);
            if seen.insert(next) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

pub(crate) fn check_cell(name: &str, cell: Cell, width: u32, height: u32) -> Result<(), Error> {
    if cell.x >= width || cell.y >= height {
        return Err(Error::InvalidSpec(format!(
            "{name} {cell} lies outside the {width}x{height} grid"
        )));
    }
    Ok(())
}
