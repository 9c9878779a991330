use std::collections::BTreeMap;

use super::Cell;
use crate::error::{Error, Result};
use crate::types::Observation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    Floor,
    Wall,
    Goal,
    Key,
    Door,
    Hazard,
    Agent,
}

impl EntityKind {
    pub const ALL: [EntityKind; 7] = [
        EntityKind::Floor,
        EntityKind::Wall,
        EntityKind::Goal,
        EntityKind::Key,
        EntityKind::Door,
        EntityKind::Hazard,
        EntityKind::Agent,
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub struct PixelRenderSpec {
    pub cell_size: u32,
    pub intensities: BTreeMap<EntityKind, u8>,
}

impl Default for PixelRenderSpec {
    fn default() -> Self {
        Self::with_cell_size(4)
    }
}

impl PixelRenderSpec {
    pub fn with_cell_size(cell_size: u32) -> Self {
        let intensities = BTreeMap::from([
            (EntityKind::Floor, 0),
            (EntityKind::Wall, 80),
            (EntityKind::Goal, 120),
            (EntityKind::Key, 200),
            (EntityKind::Door, 160),
            (EntityKind::Hazard, 40),
            (EntityKind::Agent, 255),
        ]);
        Self {
            cell_size,
            intensities,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 {
            return Err(Error::InvalidSpec("cell_size must be positive".into()));
        }
        let mut seen = BTreeMap::new();
        for kind in EntityKind::ALL {
            let value = self
                .intensity(kind)
                .ok_or_else(|| Error::InvalidSpec(format!("no intensity assigned to {kind:?}")))?;
            if let Some(other) = seen.insert(value, kind) {
                return Err(Error::InvalidSpec(format!(
                    "{other:?} and {kind:?} share intensity {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn intensity(&self, kind: EntityKind) -> Option<u8> {
        self.intensities.get(&kind).copied()
    }

    /// L1 distance produced by the agent moving between two floor cells.
    pub fn agent_move_distance(&self) -> f64 {
        2.0 * self.agent_cell_contrast()
    }

    /// `cell_size² · |agent − floor|`, half of an agent move.
    pub fn agent_cell_contrast(&self) -> f64 {
        let agent = f64::from(self.intensity(EntityKind::Agent).unwrap_or(255));
        let floor = f64::from(self.intensity(EntityKind::Floor).unwrap_or(0));
        f64::from(self.cell_size * self.cell_size) * (agent - floor).abs()
    }
}

/// Anything that can be drawn as a grid of entity kinds with an agent on top.
pub trait GridScene {
    fn grid_size(&self) -> (u32, u32);

    /// Background entity at `cell`, ignoring the agent.
    fn entity_at(&self, cell: Cell) -> EntityKind;

    fn agent_cell(&self) -> Cell;
}

pub fn render_pixels<S: GridScene + ?Sized>(scene: &S, spec: &PixelRenderSpec) -> Observation {
    let (w, h) = scene.grid_size();
    let cs = spec.cell_size;
    let (pw, ph) = (w * cs, h * cs);
    let agent = scene.agent_cell();
    let mut values = vec![0u8; (pw * ph) as usize];
    for cy in 0..h {
        for cx in 0..w {
            let cell = Cell::new(cx, cy);
            let kind = if cell == agent {
                EntityKind::Agent
            } else {
                scene.entity_at(cell)
            };
            let value = spec.intensity(kind).unwrap_or(0);
            for py in cy * cs..(cy + 1) * cs {
                let row = (py * pw) as usize;
                values[row + (cx * cs) as usize..row + ((cx + 1) * cs) as usize].fill(value);
            }
        }
    }
    Observation::pixels(pw, ph, values).expect("rendered grid has consistent dimensions")
}
