use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{PlanDiagnostics, PlanError, PlanMode, PlanOutcome, Planner};
use crate::semantic::{Cell, SemanticGrid};
use crate::sim::{step, Belief, Heading, PlannerAction, Pose};
use crate::world::World;

const ACTIONS: [PlannerAction; 3] = [PlannerAction::Forward, PlannerAction::TurnLeft, PlannerAction::TurnRight];

/// Optimal plan with the full map: fewest forward hops, then fewest turns.
///
/// The hop count always equals the Dijkstra distance; among those shortest
/// paths the one needing the fewest turns from the start heading is returned.
pub fn oracle_plan(world: &SemanticGrid, pose: Pose, goal: Cell) -> Result<PlanOutcome, PlanError> {
    if !world.is_traversable(pose.cell) {
        return Err(PlanError::AgentOffTraversable(pose.cell));
    }
    let w = world.width();
    let index = |p: Pose| (p.cell.row * w + p.cell.col) * 4 + p.heading.index();
    let mut best = vec![(u32::MAX, u32::MAX); world.cells().len() * 4];
    let mut back: Vec<Option<(Pose, PlannerAction)>> = vec![None; world.cells().len() * 4];
    let mut heap = BinaryHeap::new();
    best[index(pose)] = (0, 0);
    heap.push(Reverse((0u32, 0u32, index(pose))));
    let decode = |i: usize| Pose {
        cell: Cell::new(i / 4 / w, i / 4 % w),
        heading: Heading::ALL[i % 4],
    };
    let mut reached = None;
    while let Some(Reverse((hops, turns, i))) = heap.pop() {
        if (hops, turns) > best[i] {
            continue;
        }
        let cur = decode(i);
        if cur.cell == goal {
            reached = Some(cur);
            break;
        }
        for action in ACTIONS {
            let next = step(world, cur, action);
            if next == cur {
                continue;
            }
            let cost = match action {
                PlannerAction::Forward => (hops + 1, turns),
                _ => (hops, turns + 1),
            };
            let j = index(next);
            if cost < best[j] {
                best[j] = cost;
                back[j] = Some((cur, action));
                heap.push(Reverse((cost.0, cost.1, j)));
            }
        }
    }
    let end = reached.ok_or(PlanError::NoPath { from: pose.cell, goal })?;
    let mut actions = Vec::new();
    let mut path = vec![end.cell];
    let mut cur = end;
    while let Some((prev, action)) = back[index(cur)] {
        actions.push(action);
        if action == PlannerAction::Forward {
            path.push(prev.cell);
        }
        cur = prev;
    }
    actions.reverse();
    path.reverse();
    Ok(PlanOutcome {
        mode: PlanMode::GoalPhase { path },
        actions,
        diagnostics: PlanDiagnostics::default(),
    })
}

/// Planner with the full prior map. Reports a give-up when no path exists.
pub struct OraclePlanner {
    world: World,
}

impl OraclePlanner {
    pub fn new(world: World) -> Self {
        Self { world }
    }
}

impl Planner for OraclePlanner {
    fn plan(&mut self, _belief: &Belief, pose: Pose) -> Result<PlanOutcome, PlanError> {
        match oracle_plan(&self.world.grid, pose, self.world.goal) {
            Err(PlanError::NoPath { .. }) => Ok(PlanOutcome::give_up(PlanDiagnostics::default())),
            other => other,
        }
    }
}
