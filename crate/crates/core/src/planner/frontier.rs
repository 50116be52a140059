use super::{explore_towards, frontiers, goal_phase, reachable, PlanDiagnostics, PlanError, PlanOutcome, Planner};
use crate::costmap::traversable_mask;
use crate::sim::{offset_cell, Belief, Heading, Pose, SensorModel};

/// Nearest-frontier exploration: no context, only BFS depth (ties row-major).
///
/// On arrival the agent faces an unobserved neighbour of the frontier cell.
pub fn frontier_plan(belief: &Belief, pose: Pose, sensor: &SensorModel) -> Result<PlanOutcome, PlanError> {
    let map = belief.map();
    let (w, h) = map.dims();
    let r = reachable(&traversable_mask(map), pose)?;
    let mut diag = PlanDiagnostics {
        reachable: r.len(),
        ..Default::default()
    };
    if let Some(outcome) = goal_phase(belief, &r, pose, diag) {
        return outcome;
    }
    let sets = frontiers(belief, &r, sensor);
    diag.frontier = sets.frontier.len();
    diag.candidates = sets.frontier.len();
    if sets.frontier.is_empty() {
        return Ok(PlanOutcome::give_up(diag));
    }
    let facing_unknown = |cell| {
        Heading::ALL
            .into_iter()
            .filter(|hd| {
                let (dr, dc) = hd.delta();
                offset_cell(cell, dr, dc, w, h).is_some_and(|n| !map.is_observed(n))
            })
            .collect()
    };
    explore_towards(
        &r,
        pose,
        &sets.frontier,
        |c| r.depth(c).expect("frontier cells are reachable"),
        facing_unknown,
        diag,
    )
}

pub struct FrontierPlanner {
    sensor: SensorModel,
}

impl FrontierPlanner {
    pub fn new(sensor: SensorModel) -> Self {
        Self { sensor }
    }
}

impl Planner for FrontierPlanner {
    fn plan(&mut self, belief: &Belief, pose: Pose) -> Result<PlanOutcome, PlanError> {
        frontier_plan(belief, pose, &self.sensor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::PlanMode;
    use crate::semantic::{Cell, Palette, SemanticGrid};
    use crate::sim::SensorConfig;

    /// Road at `cells`, observed grass at `seen`, everything else unobserved.
    fn corridor(width: usize, height: usize, cells: &[Cell], seen: &[Cell]) -> Belief {
        let p = Palette::default_palette();
        let road = p.id_of_name("road").unwrap();
        let grass = p.id_of_name("grass").unwrap();
        let mut map = SemanticGrid::unobserved(width, height, p).unwrap();
        for r in 0..height {
            for c in 0..width {
                let cell = Cell::new(r, c);
                if seen.contains(&cell) || cells.contains(&cell) {
                    map.set(cell, grass);
                }
            }
        }
        for &cell in cells {
            map.set(cell, road);
        }
        Belief::from_map(map)
    }

    fn sensor() -> SensorModel {
        SensorModel::new(SensorConfig::default())
    }

    fn subgoal(out: &PlanOutcome) -> Cell {
        match out.mode {
            PlanMode::Exploring { subgoal } => subgoal.cell,
            ref other => panic!("expected exploration, got {other:?}"),
        }
    }

    #[test]
    fn nearer_frontier_wins() {
        // road along row 2; column 9 and the cell above (2,3) are unobserved
        let road: Vec<Cell> = (0..9).map(|c| Cell::new(2, c)).collect();
        let mut seen: Vec<Cell> = (0..5).flat_map(|r| (0..9).map(move |c| Cell::new(r, c))).collect();
        seen.retain(|&c| c != Cell::new(1, 3));
        let belief = corridor(10, 5, &road, &seen);
        let out = frontier_plan(&belief, Pose::new(2, 0, Heading::E), &sensor()).unwrap();
        // (2,3) is 3 steps away, (2,8) is 8
        assert_eq!(subgoal(&out), Cell::new(2, 3));
        assert_eq!(out.actions.last(), Some(&crate::sim::PlannerAction::TurnLeft));
    }

    #[test]
    fn single_frontier_is_the_subgoal() {
        let road: Vec<Cell> = (0..6).map(|c| Cell::new(0, c)).collect();
        let seen: Vec<Cell> = (0..6).map(|c| Cell::new(1, c)).collect();
        // only (0,5) borders the unobserved column 6 from the road
        let belief = corridor(7, 2, &road, &seen);
        let out = frontier_plan(&belief, Pose::new(0, 0, Heading::W), &sensor()).unwrap();
        assert_eq!(out.diagnostics.frontier, 1);
        assert_eq!(subgoal(&out), Cell::new(0, 5));
    }

    #[test]
    fn equal_depth_ties_break_row_major() {
        // L-shaped road cornered at (4,4); ends (4,1) and (1,4) both at depth 3
        let mut road: Vec<Cell> = (1..=4).map(|c| Cell::new(4, c)).collect();
        road.extend((1..4).map(|r| Cell::new(r, 4)));
        let seen: Vec<Cell> = (1..9)
            .flat_map(|r| (1..9).map(move |c| Cell::new(r, c)))
            .collect();
        let belief = corridor(9, 9, &road, &seen);
        let out = frontier_plan(&belief, Pose::new(4, 4, Heading::S), &sensor()).unwrap();
        assert_eq!(subgoal(&out), Cell::new(1, 4));
    }
}
