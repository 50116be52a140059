//! Procedural suburban house layouts.
//!
//! Worlds are a horizontal road (with sidewalks on larger maps) lined with
//! house lots. Every house has a driveway from the road and a walkway from the
//! driveway to its front door; exactly one door is the goal.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::{dijkstra_cost_to_go, traversable_mask};
use crate::semantic::{Cell, Palette, SemanticGrid};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorldError {
    #[error("no layout fits in {width}x{height} after {attempts} attempts")]
    InfeasibleLayout {
        width: usize,
        height: usize,
        attempts: u32,
    },
    #[error("palette lacks class {0:?}")]
    MissingClass(&'static str),
    #[error("map must contain exactly one goal cell, found {0}")]
    GoalCount(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    pub grid: SemanticGrid,
    pub goal: Cell,
}

impl World {
    /// Wraps a map that contains exactly one goal-class cell.
    pub fn from_grid(grid: SemanticGrid) -> Result<Self, WorldError> {
        let goals = grid.cells_of(grid.palette().goal_id());
        match goals.as_slice() {
            [goal] => Ok(Self { goal: *goal, grid }),
            other => Err(WorldError::GoalCount(other.len())),
        }
    }

    pub fn cells_of_class(&self, name: &str) -> Vec<Cell> {
        self.grid
            .palette()
            .id_of_name(name)
            .map(|id| self.grid.cells_of(id))
            .unwrap_or_default()
    }

    /// Copy of this world with every traversable neighbour of the goal turned
    /// into house, so no path to the goal exists.
    pub fn sealed(&self) -> Result<World, WorldError> {
        let house = self
            .grid
            .palette()
            .id_of_name("house")
            .ok_or(WorldError::MissingClass("house"))?;
        let mut grid = self.grid.clone();
        for n in self.goal.neighbors4(grid.width(), grid.height()) {
            if grid.is_traversable(n) {
                grid.set(n, house);
            }
        }
        Ok(World { grid, goal: self.goal })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Inclusive ranges, in cells.
    pub road_width: (usize, usize),
    pub lot_width: (usize, usize),
    pub house_width: (usize, usize),
    pub house_depth: (usize, usize),
    /// Lawn depth between the sidewalk and the house front.
    pub setback: (usize, usize),
    pub max_attempts: u32,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 50,
            height: 50,
            road_width: (2, 3),
            lot_width: (10, 16),
            house_width: (4, 8),
            house_depth: (3, 7),
            setback: (3, 8),
            max_attempts: 64,
        }
    }
}

impl WorldSpec {
    pub fn with_seed(seed: u64, dims: usize) -> Self {
        Self {
            seed,
            width: dims,
            height: dims,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy)]
struct Classes {
    road: u8,
    driveway: u8,
    sidewalk: u8,
    walkway: u8,
    grass: u8,
    house: u8,
    goal: u8,
}

impl Classes {
    fn of(palette: &Palette) -> Result<Self, WorldError> {
        let get = |name: &'static str| palette.id_of_name(name).ok_or(WorldError::MissingClass(name));
        Ok(Self {
            road: get("road")?,
            driveway: get("driveway")?,
            sidewalk: get("sidewalk")?,
            walkway: get("walkway")?,
            grass: get("grass")?,
            house: get("house")?,
            goal: palette.goal_id(),
        })
    }
}

pub fn generate_world(spec: &WorldSpec) -> Result<World, WorldError> {
    generate_world_with_palette(spec, Palette::default_palette())
}

/// The 5x5 fixture: road along row 4, driveway (3,2), walkway (2,2), goal (1,2).
pub fn t5_world() -> (SemanticGrid, Cell) {
    let world = generate_world(&WorldSpec::with_seed(0, 5)).expect("compact layout fits 5x5");
    (world.grid, world.goal)
}

pub fn generate_world_with_palette(spec: &WorldSpec, palette: Arc<Palette>) -> Result<World, WorldError> {
    let classes = Classes::of(&palette)?;
    let (w, h) = (spec.width, spec.height);
    let infeasible = |attempts| WorldError::InfeasibleLayout {
        width: w,
        height: h,
        attempts,
    };
    if w < 3 || h < 5 {
        return Err(infeasible(0));
    }
    if w < 10 || h < 10 {
        return Ok(compact_layout(w, h, classes, palette));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.max_attempts.max(1) {
        let Some(grid) = try_layout(spec, classes, &palette, &mut rng) else {
            continue;
        };
        let world = World::from_grid(grid).expect("layout places one goal");
        if goal_reachable_from_roads(&world, classes.road) {
            return Ok(world);
        }
    }
    Err(infeasible(spec.max_attempts.max(1)))
}

fn compact_layout(w: usize, h: usize, k: Classes, palette: Arc<Palette>) -> World {
    let mut grid = SemanticGrid::filled(w, h, k.grass, palette).expect("positive dims");
    let mid = w / 2;
    for col in 0..w {
        grid.set(Cell::new(h - 1, col), k.road);
    }
    for col in mid - 1..=mid + 1 {
        grid.set(Cell::new(0, col), k.house);
        grid.set(Cell::new(1, col), k.house);
    }
    let goal = Cell::new(1, mid);
    grid.set(goal, k.goal);
    for row in 2..h - 2 {
        grid.set(Cell::new(row, mid), k.walkway);
    }
    grid.set(Cell::new(h - 2, mid), k.driveway);
    World { grid, goal }
}

fn range(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Option<usize> {
    (lo <= hi).then(|| rng.gen_range(lo..=hi))
}

struct Side {
    /// Lawn row touching the road band.
    edge_row: usize,
    /// Rows available from the edge row to the map border, inclusive.
    depth: usize,
    /// +1 when moving away from the road increases the row index.
    away: i64,
}

struct House {
    door: Cell,
}

fn try_layout(spec: &WorldSpec, k: Classes, palette: &Arc<Palette>, rng: &mut ChaCha8Rng) -> Option<SemanticGrid> {
    let (w, h) = (spec.width, spec.height);
    let mut grid = SemanticGrid::filled(w, h, k.grass, palette.clone()).ok()?;
    let sidewalk = usize::from(h >= 20);
    let road_w = range(rng, spec.road_width.0.max(1), spec.road_width.1.min(h / 5).max(1))?;
    let band = road_w + 2 * sidewalk;
    let min_depth = spec.house_depth.0 + spec.setback.0.max(2);

    let mut sides = Vec::new();
    let road_top = if h < 24 {
        // single row of houses above a road along the bottom edge
        let top = h - road_w;
        if top < sidewalk + min_depth {
            return None;
        }
        let edge_row = top - sidewalk - 1;
        sides.push(Side {
            edge_row,
            depth: edge_row + 1,
            away: -1,
        });
        top
    } else {
        let free = h - band;
        let centre = free / 2;
        let upper = range(rng, centre.saturating_sub(5).max(min_depth), (centre + 5).min(free - min_depth))?;
        let top = upper + sidewalk;
        sides.push(Side {
            edge_row: upper - 1,
            depth: upper,
            away: -1,
        });
        sides.push(Side {
            edge_row: top + road_w + sidewalk,
            depth: h - (top + road_w + sidewalk),
            away: 1,
        });
        top
    };
    for col in 0..w {
        for row in road_top..road_top + road_w {
            grid.set(Cell::new(row, col), k.road);
        }
        if sidewalk == 1 {
            grid.set(Cell::new(road_top - 1, col), k.sidewalk);
            if road_top + road_w < h {
                grid.set(Cell::new(road_top + road_w, col), k.sidewalk);
            }
        }
    }

    let mut houses = Vec::new();
    for side in &sides {
        let mut col = 0;
        while col < w {
            let mut lot_w = range(rng, spec.lot_width.0, spec.lot_width.1).unwrap_or(w);
            if w - (col + lot_w).min(w) < spec.lot_width.0 {
                lot_w = w - col;
            }
            if let Some(house) = place_house(&mut grid, spec, k, side, col, lot_w, rng) {
                houses.push(house);
            }
            col += lot_w;
        }
    }
    if houses.is_empty() {
        return None;
    }
    let chosen = rng.gen_range(0..houses.len());
    grid.set(houses[chosen].door, k.goal);
    Some(grid)
}

fn place_house(
    grid: &mut SemanticGrid,
    spec: &WorldSpec,
    k: Classes,
    side: &Side,
    lot_left: usize,
    lot_w: usize,
    rng: &mut ChaCha8Rng,
) -> Option<House> {
    // lot margin, house, driveway (2 wide), margin
    let house_w = range(rng, spec.house_width.0.max(3), spec.house_width.1.min(lot_w.saturating_sub(4)))?;
    let house_d = range(
        rng,
        spec.house_depth.0.max(2),
        spec.house_depth.1.min(side.depth.saturating_sub(spec.setback.0.max(2))),
    )?;
    let setback = range(rng, spec.setback.0.max(2), spec.setback.1.min(side.depth - house_d))?;
    let drive_right = rng.gen_bool(0.5);
    let slack = lot_w - house_w - 4;
    let house_left = lot_left + 1 + range(rng, 0, slack)? + if drive_right { 0 } else { 2 };
    let house_right = house_left + house_w - 1;
    let drive_cols = if drive_right {
        [house_right + 1, house_right + 2]
    } else {
        [house_left - 2, house_left - 1]
    };

    let at = |steps_from_edge: usize| -> usize {
        (side.edge_row as i64 + side.away * steps_from_edge as i64) as usize
    };
    let front = at(setback);
    for depth in 0..house_d {
        let row = at(setback + depth);
        for col in house_left..=house_right {
            grid.set(Cell::new(row, col), k.house);
        }
    }
    let garage = range(rng, 0, house_d - 1)?;
    for steps in 0..=setback + garage {
        for &col in &drive_cols {
            grid.set(Cell::new(at(steps), col), k.driveway);
        }
    }
    let door_col = range(rng, house_left + 1, house_right - 1)?;
    let walk_len = range(rng, 1, setback - 1)?;
    let bend = at(setback - walk_len);
    for steps in 1..=walk_len {
        grid.set(Cell::new(at(setback - steps), door_col), k.walkway);
    }
    let (lo, hi) = if drive_right {
        (door_col + 1, drive_cols[0])
    } else {
        (drive_cols[1] + 1, door_col)
    };
    for col in lo..hi {
        grid.set(Cell::new(bend, col), k.walkway);
    }
    Some(House {
        door: Cell::new(front, door_col),
    })
}

fn goal_reachable_from_roads(world: &World, road: u8) -> bool {
    let Ok(field) = dijkstra_cost_to_go(&traversable_mask(&world.grid), world.goal) else {
        return false;
    };
    world.grid.cells_of(road).iter().all(|&c| field.get(c).finite().is_some())
}
