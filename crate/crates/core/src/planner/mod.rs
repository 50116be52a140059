//! Frontier planners over the agent's belief map.
//!
//! All planners share the same skeleton: breadth-first search over observed,
//! traversable cells from the agent; a shortest path once a goal cell is
//! reachable; otherwise an exploration subgoal picked among frontier-expanding
//! cells, reached by backtracking the search tree. They differ only in how the
//! subgoal is ranked.

mod dc2g;
mod episode;
mod frontier;
mod oracle;

use std::collections::VecDeque;

use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::semantic::{BinaryGrid, Cell};
use crate::sim::{offset_cell, Belief, Heading, PlannerAction, Pose, SensorModel};

pub use dc2g::{dc2g_plan, render_belief, Dc2gPlanner};
pub use episode::{run_episode, EpisodeResult, EpisodeStatus, StepRecord};
pub use frontier::{frontier_plan, FrontierPlanner};
pub use oracle::{oracle_plan, OraclePlanner};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("agent cell {0} is not traversable in the belief")]
    AgentOffTraversable(Cell),
    #[error("hop from {from} to {to} is not between 4-adjacent cells")]
    NonAdjacentHop { from: Cell, to: Cell },
    #[error("no path from {from} to the goal {goal}")]
    NoPath { from: Cell, goal: Cell },
    #[error("estimator failed: {0}")]
    PlannerEstimatorError(#[from] EstimatorError),
}

/// Something that chooses the next action from the agent's belief.
pub trait Planner {
    fn plan(&mut self, belief: &Belief, pose: Pose) -> Result<PlanOutcome, PlanError>;
}

impl<P: Planner + ?Sized> Planner for Box<P> {
    fn plan(&mut self, belief: &Belief, pose: Pose) -> Result<PlanOutcome, PlanError> {
        (**self).plan(belief, pose)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanMode {
    /// Heading to a pose that will reveal cells beyond the frontier.
    Exploring { subgoal: Pose },
    /// A goal cell is reachable; `path` runs from the agent cell to it.
    GoalPhase { path: Vec<Cell> },
    GiveUp,
}

/// Sizes of the intermediate sets, for traces and instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlanDiagnostics {
    pub reachable: usize,
    pub frontier: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOutcome {
    pub mode: PlanMode,
    pub actions: Vec<PlannerAction>,
    pub diagnostics: PlanDiagnostics,
}

impl PlanOutcome {
    pub fn next_action(&self) -> Option<PlannerAction> {
        self.actions.first().copied()
    }

    pub fn give_up(diagnostics: PlanDiagnostics) -> Self {
        Self {
            mode: PlanMode::GiveUp,
            actions: Vec::new(),
            diagnostics,
        }
    }

    pub fn subgoal_cell(&self) -> Option<Cell> {
        match &self.mode {
            PlanMode::Exploring { subgoal } => Some(subgoal.cell),
            PlanMode::GoalPhase { path } => path.last().copied(),
            PlanMode::GiveUp => None,
        }
    }
}

/// Breadth-first search tree over traversable cells, rooted at the agent.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    width: usize,
    height: usize,
    root: Cell,
    /// Cells in visit order (non-decreasing depth).
    order: Vec<Cell>,
    depth: Vec<Option<u32>>,
    parent: Vec<Option<Cell>>,
}

impl ReachableSet {
    pub fn root(&self) -> Cell {
        self.root
    }

    pub fn cells(&self) -> &[Cell] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.depth(cell).is_some()
    }

    pub fn depth(&self, cell: Cell) -> Option<u32> {
        if cell.row >= self.height || cell.col >= self.width {
            return None;
        }
        self.depth[cell.row * self.width + cell.col]
    }

    pub fn parent(&self, cell: Cell) -> Option<Cell> {
        self.parent[cell.row * self.width + cell.col]
    }

    /// Cells from the root to `target` inclusive, following parent links.
    pub fn path_to(&self, target: Cell) -> Option<Vec<Cell>> {
        self.depth(target)?;
        let mut path = vec![target];
        let mut cur = target;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

pub fn reachable(tr: &BinaryGrid, pose: Pose) -> Result<ReachableSet, PlanError> {
    let root = pose.cell;
    if !tr.contains(root) || !tr.get(root) {
        return Err(PlanError::AgentOffTraversable(root));
    }
    let (w, h) = tr.dims();
    let mut depth = vec![None; w * h];
    let mut parent = vec![None; w * h];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    depth[root.row * w + root.col] = Some(0);
    while let Some(cell) = queue.pop_front() {
        order.push(cell);
        let d = depth[cell.row * w + cell.col].expect("queued cells have a depth");
        for n in cell.neighbors4(w, h) {
            let idx = n.row * w + n.col;
            if tr.get(n) && depth[idx].is_none() {
                depth[idx] = Some(d + 1);
                parent[idx] = Some(cell);
                queue.push_back(n);
            }
        }
    }
    Ok(ReachableSet {
        width: w,
        height: h,
        root,
        order,
        depth,
        parent,
    })
}

/// Frontier cells and the reachable cells from which the sensor can see past them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierSets {
    /// Reachable cells with at least one unobserved 4-neighbour, row-major.
    pub frontier: Vec<Cell>,
    /// Cells from which, for some heading, the wedge covers an unobserved
    /// cell bordering the frontier. Row-major.
    pub expanding: Vec<Cell>,
    /// `expanding` restricted to the reachable set.
    pub reachable_expanding: Vec<Cell>,
    width: usize,
    /// Per-cell bitmask of the headings (by [`Heading::index`]) that see past the frontier.
    headings: Vec<u8>,
}

impl FrontierSets {
    /// Headings at `cell` whose wedge reveals cells beyond the frontier.
    pub fn headings_at(&self, cell: Cell) -> impl Iterator<Item = Heading> {
        let bits = self.headings.get(cell.row * self.width + cell.col).copied().unwrap_or(0);
        Heading::ALL.into_iter().filter(move |h| bits & (1 << h.index()) != 0)
    }
}

pub fn frontiers(belief: &Belief, r: &ReachableSet, sensor: &SensorModel) -> FrontierSets {
    let map = belief.map();
    let (w, h) = map.dims();
    let mut frontier = Vec::new();
    let mut beyond = vec![false; w * h];
    for &cell in r.cells() {
        let mut is_frontier = false;
        for n in cell.neighbors4(w, h) {
            if !map.is_observed(n) {
                is_frontier = true;
                beyond[n.row * w + n.col] = true;
            }
        }
        if is_frontier {
            frontier.push(cell);
        }
    }
    frontier.sort();

    let mut headings = vec![0u8; w * h];
    for (i, _) in beyond.iter().enumerate().filter(|(_, &b)| b) {
        let target = Cell::new(i / w, i % w);
        for heading in Heading::ALL {
            let bit = 1u8 << heading.index();
            for &(dr, dc) in sensor.offsets(heading) {
                if let Some(viewer) = offset_cell(target, -dr, -dc, w, h) {
                    if r.contains(viewer) {
                        headings[viewer.row * w + viewer.col] |= bit;
                    }
                }
            }
        }
    }
    let expanding: Vec<Cell> = (0..w * h)
        .filter(|&i| headings[i] != 0)
        .map(|i| Cell::new(i / w, i % w))
        .collect();
    let reachable_expanding = expanding.iter().copied().filter(|&c| r.contains(c)).collect();
    FrontierSets {
        frontier,
        expanding,
        reachable_expanding,
        width: w,
        headings,
    }
}

fn turn_actions(from: Heading, to: Heading, out: &mut Vec<PlannerAction>) {
    match from.turns_to(to) {
        0 => {}
        1 if from.left() == to => out.push(PlannerAction::TurnLeft),
        1 => out.push(PlannerAction::TurnRight),
        _ => out.extend([PlannerAction::TurnLeft, PlannerAction::TurnLeft]),
    }
}

/// Turn-then-forward primitives that walk `path` starting with `heading`.
///
/// Returns the actions and the heading on arrival.
pub fn convert_action_plan(
    path: &[Cell],
    heading: Heading,
) -> Result<(Vec<PlannerAction>, Heading), PlanError> {
    let mut actions = Vec::new();
    let mut cur = heading;
    for hop in path.windows(2) {
        let next = Heading::between(hop[0], hop[1]).ok_or(PlanError::NonAdjacentHop {
            from: hop[0],
            to: hop[1],
        })?;
        turn_actions(cur, next, &mut actions);
        actions.push(PlannerAction::Forward);
        cur = next;
    }
    Ok((actions, cur))
}

/// Shortest path to the nearest reachable goal-class cell, if any.
fn goal_phase(belief: &Belief, r: &ReachableSet, pose: Pose, diag: PlanDiagnostics) -> Option<Result<PlanOutcome, PlanError>> {
    let goal_id = belief.map().palette().goal_id();
    let goal = r
        .cells()
        .iter()
        .copied()
        .filter(|&c| belief.map().get(c) == goal_id)
        .min_by_key(|&c| (r.depth(c), c))?;
    let path = r.path_to(goal).expect("goal is reachable");
    Some(convert_action_plan(&path, pose.heading).map(|(actions, _)| PlanOutcome {
        mode: PlanMode::GoalPhase { path },
        actions,
        diagnostics: diag,
    }))
}

/// Backtracks to `cell`, then turns to the allowed heading needing fewest turns.
///
/// `allowed` is tried in order; the current pose itself is never a subgoal.
fn plan_to_pose(
    r: &ReachableSet,
    pose: Pose,
    cell: Cell,
    allowed: impl Iterator<Item = Heading>,
) -> Result<Option<(Pose, Vec<PlannerAction>)>, PlanError> {
    let path = r.path_to(cell).expect("candidate is reachable");
    let (mut actions, arrival) = convert_action_plan(&path, pose.heading)?;
    let heading = allowed
        .filter(|&h| !(cell == pose.cell && h == pose.heading))
        .min_by_key(|&h| arrival.turns_to(h));
    Ok(heading.map(|h| {
        turn_actions(arrival, h, &mut actions);
        (Pose { cell, heading: h }, actions)
    }))
}

/// Picks the best candidate by `rank` (lower is better), skipping cells that
/// offer no heading other than the current pose.
fn explore_towards<K: Ord>(
    r: &ReachableSet,
    pose: Pose,
    candidates: &[Cell],
    mut rank: impl FnMut(Cell) -> K,
    headings: impl Fn(Cell) -> Vec<Heading>,
    diag: PlanDiagnostics,
) -> Result<PlanOutcome, PlanError> {
    let mut ordered: Vec<(K, Cell)> = candidates.iter().map(|&c| (rank(c), c)).collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, cell) in ordered {
        if let Some((subgoal, actions)) = plan_to_pose(r, pose, cell, headings(cell).into_iter())? {
            return Ok(PlanOutcome {
                mode: PlanMode::Exploring { subgoal },
                actions,
                diagnostics: diag,
            });
        }
    }
    Ok(PlanOutcome::give_up(diag))
}
