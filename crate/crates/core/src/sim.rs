//! Gridworld dynamics, the wedge sensor and the agent's remembered map.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic::{BinaryGrid, Cell, SemanticGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    /// (row, col) unit step.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Heading::N => (-1, 0),
            Heading::E => (0, 1),
            Heading::S => (1, 0),
            Heading::W => (0, -1),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    pub fn right(self) -> Heading {
        self.left().left().left()
    }

    /// Number of 90 degree turns separating two headings (0, 1 or 2).
    pub fn turns_to(self, other: Heading) -> u32 {
        let diff = (other as i32 - self as i32).rem_euclid(4);
        if diff == 3 {
            1
        } else {
            diff as u32
        }
    }

    /// Heading of a 4-adjacent hop, if the cells are adjacent.
    pub fn between(from: Cell, to: Cell) -> Option<Heading> {
        let dr = to.row as i64 - from.row as i64;
        let dc = to.col as i64 - from.col as i64;
        Heading::ALL.into_iter().find(|h| h.delta() == (dr, dc))
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Heading::N => "N",
            Heading::E => "E",
            Heading::S => "S",
            Heading::W => "W",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Heading {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N" | "n" => Ok(Heading::N),
            "E" | "e" => Ok(Heading::E),
            "S" | "s" => Ok(Heading::S),
            "W" | "w" => Ok(Heading::W),
            other => Err(format!("unknown heading {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    #[serde(flatten)]
    pub cell: Cell,
    pub heading: Heading,
}

impl Pose {
    pub const fn new(row: usize, col: usize, heading: Heading) -> Self {
        Self {
            cell: Cell::new(row, col),
            heading,
        }
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.cell.row, self.cell.col, self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerAction {
    Forward,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("field of view must be in (0, 360], got {0}")]
    BadFov(f64),
    #[error("sensor range must be at least 1 cell")]
    BadRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Horizontal field of view, degrees.
    pub fov: f64,
    /// Radial range, cells.
    pub range: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { fov: 90.0, range: 8 }
    }
}

impl SensorConfig {
    pub fn new(fov: f64, range: u32) -> Result<Self, SensorError> {
        let cfg = Self { fov, range };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.fov > 0.0 && self.fov <= 360.0) {
            return Err(SensorError::BadFov(self.fov));
        }
        if self.range < 1 {
            return Err(SensorError::BadRange);
        }
        Ok(())
    }

    /// Whether `offset` (row, col from the agent) lies in the wedge facing `heading`.
    pub fn sees_offset(&self, heading: Heading, dr: i64, dc: i64) -> bool {
        if dr == 0 && dc == 0 {
            return true;
        }
        let r = self.range as i64;
        if dr * dr + dc * dc > r * r {
            return false;
        }
        let (hr, hc) = heading.delta();
        let dot = dr * hr + dc * hc;
        let cross = (dr * hc - dc * hr).abs();
        let half = self.fov / 2.0;
        if half >= 180.0 {
            true
        } else if half == 90.0 {
            dot >= 0
        } else if half == 45.0 {
            dot >= cross
        } else if half == 135.0 {
            dot >= 0 || -dot <= cross
        } else if half < 90.0 {
            dot > 0 && (cross as f64) <= half.to_radians().tan() * dot as f64
        } else {
            dot >= 0 || (cross as f64) >= (180.0 - half).to_radians().tan() * (-dot) as f64
        }
    }

    /// Offsets visible from the origin facing `heading`, row-major.
    pub fn wedge_offsets(&self, heading: Heading) -> Vec<(i64, i64)> {
        let r = self.range as i64;
        let mut out = Vec::new();
        for dr in -r..=r {
            for dc in -r..=r {
                if self.sees_offset(heading, dr, dc) {
                    out.push((dr, dc));
                }
            }
        }
        out
    }
}

/// Precomputed wedge offsets for all four headings.
#[derive(Debug, Clone)]
pub struct SensorModel {
    config: SensorConfig,
    offsets: [Vec<(i64, i64)>; 4],
}

impl SensorModel {
    pub fn new(config: SensorConfig) -> Self {
        let offsets = Heading::ALL.map(|h| config.wedge_offsets(h));
        Self { config, offsets }
    }

    pub fn config(&self) -> &SensorConfig {
        &self.config
    }

    pub fn offsets(&self, heading: Heading) -> &[(i64, i64)] {
        &self.offsets[heading.index()]
    }

    /// Cells inside the wedge at `pose`, clipped to a `width` x `height` grid.
    pub fn visible_cells(&self, pose: Pose, width: usize, height: usize) -> Vec<Cell> {
        self.offsets(pose.heading)
            .iter()
            .filter_map(|&(dr, dc)| offset_cell(pose.cell, dr, dc, width, height))
            .collect()
    }
}

pub(crate) fn offset_cell(cell: Cell, dr: i64, dc: i64, width: usize, height: usize) -> Option<Cell> {
    let r = cell.row as i64 + dr;
    let c = cell.col as i64 + dc;
    (r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width)
        .then(|| Cell::new(r as usize, c as usize))
}

pub fn visible_cells(pose: Pose, cfg: &SensorConfig, width: usize, height: usize) -> Vec<Cell> {
    SensorModel::new(*cfg).visible_cells(pose, width, height)
}

/// Applies one action. Blocked or out-of-bounds moves leave the pose unchanged.
pub fn step(world: &SemanticGrid, pose: Pose, action: PlannerAction) -> Pose {
    match action {
        PlannerAction::TurnLeft => Pose {
            heading: pose.heading.left(),
            ..pose
        },
        PlannerAction::TurnRight => Pose {
            heading: pose.heading.right(),
            ..pose
        },
        PlannerAction::Forward => {
            let (dr, dc) = pose.heading.delta();
            match offset_cell(pose.cell, dr, dc, world.width(), world.height()) {
                Some(next) if world.is_traversable(next) => Pose { cell: next, ..pose },
                _ => pose,
            }
        }
    }
}

/// The agent's remembered semantic map; never-seen cells hold the unobserved class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Belief {
    map: SemanticGrid,
    observed: usize,
}

impl Belief {
    pub fn new(width: usize, height: usize, palette: std::sync::Arc<crate::semantic::Palette>) -> Self {
        let map = SemanticGrid::unobserved(width, height, palette).expect("positive dims");
        Self { map, observed: 0 }
    }

    pub fn blank_like(world: &SemanticGrid) -> Self {
        Self::new(world.width(), world.height(), world.palette().clone())
    }

    /// Treats every non-unobserved cell of `map` as observed.
    pub fn from_map(map: SemanticGrid) -> Self {
        let u = map.palette().unobserved_id();
        let observed = map.cells().iter().filter(|&&id| id != u).count();
        Self { map, observed }
    }

    pub fn map(&self) -> &SemanticGrid {
        &self.map
    }

    pub fn observed_count(&self) -> usize {
        self.observed
    }

    pub fn is_observed(&self, cell: Cell) -> bool {
        self.map.is_observed(cell)
    }

    pub fn observed_mask(&self) -> BinaryGrid {
        BinaryGrid::from_fn(self.map.width(), self.map.height(), |c| self.map.is_observed(c))
    }

    /// Copies the world's classes into every visible cell; returns how many were new.
    pub fn observe(&mut self, world: &SemanticGrid, pose: Pose, sensor: &SensorModel) -> usize {
        assert_eq!(world.dims(), self.map.dims(), "belief and world dimensions differ");
        let mut fresh = 0;
        for cell in sensor.visible_cells(pose, world.width(), world.height()) {
            if !self.map.is_observed(cell) {
                fresh += 1;
            }
            self.map.set(cell, world.get(cell));
        }
        self.observed += fresh;
        fresh
    }
}

/// Functional form of [`Belief::observe`].
pub fn observe(world: &SemanticGrid, belief: &Belief, pose: Pose, cfg: &SensorConfig) -> Belief {
    let mut next = belief.clone();
    next.observe(world, pose, &SensorModel::new(*cfg));
    next
}
