use std::time::Instant;

use serde::Serialize;

use super::{PlanMode, Planner};
use crate::semantic::Cell;
use crate::sim::{step, Belief, PlannerAction, Pose, SensorModel};
use crate::world::World;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    ReachedGoal,
    GaveUp,
    Timeout,
    /// The planner or its estimator failed; the message is kept for the report.
    Error(String),
}

impl EpisodeStatus {
    pub fn label(&self) -> &'static str {
        match self {
            EpisodeStatus::ReachedGoal => "reached_goal",
            EpisodeStatus::GaveUp => "gave_up",
            EpisodeStatus::Timeout => "timeout",
            EpisodeStatus::Error(_) => "error",
        }
    }
}

/// One line of the episode trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub pose: Pose,
    pub action: PlannerAction,
    pub subgoal: Option<Cell>,
    pub frontier_count: usize,
    pub observed_count: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Actions executed; turns and forward moves cost one each.
    pub steps: usize,
    pub status: EpisodeStatus,
    /// Start pose followed by the pose after every action.
    pub trajectory: Vec<Pose>,
    pub plan_ms: Vec<f64>,
    pub trace: Vec<StepRecord>,
    pub belief: Belief,
}

/// Sense, plan, act until the goal cell is reached, the planner gives up, or
/// `max_steps` actions have been taken. Replans after every action.
pub fn run_episode<P: Planner + ?Sized>(
    world: &World,
    start: Pose,
    planner: &mut P,
    sensor: &SensorModel,
    max_steps: usize,
) -> EpisodeResult {
    let mut belief = Belief::blank_like(&world.grid);
    let mut pose = start;
    let mut trajectory = vec![start];
    let mut plan_ms = Vec::new();
    let mut trace = Vec::new();
    belief.observe(&world.grid, pose, sensor);
    let status = loop {
        if pose.cell == world.goal {
            break EpisodeStatus::ReachedGoal;
        }
        if trace.len() >= max_steps {
            break EpisodeStatus::Timeout;
        }
        let started = Instant::now();
        let outcome = planner.plan(&belief, pose);
        plan_ms.push(started.elapsed().as_secs_f64() * 1e3);
        let outcome = match outcome {
            Ok(outcome) => outcome,
            Err(e) => break EpisodeStatus::Error(e.to_string()),
        };
        if outcome.mode == PlanMode::GiveUp {
            break EpisodeStatus::GaveUp;
        }
        let Some(action) = outcome.next_action() else {
            break EpisodeStatus::Error(format!("empty plan at {pose}"));
        };
        trace.push(StepRecord {
            t: trace.len(),
            pose,
            action,
            subgoal: outcome.subgoal_cell(),
            frontier_count: outcome.diagnostics.frontier,
            observed_count: belief.observed_count(),
        });
        pose = step(&world.grid, pose, action);
        trajectory.push(pose);
        belief.observe(&world.grid, pose, sensor);
    };
    EpisodeResult {
        steps: trace.len(),
        status,
        trajectory,
        plan_ms,
        trace,
        belief,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{HeuristicEstimator, OracleEstimator};
    use crate::planner::{oracle_plan, Dc2gPlanner, FrontierPlanner, OraclePlanner};
    use crate::sim::{Heading, SensorConfig};
    use crate::world::{generate_world, t5_world, WorldSpec};

    fn t5() -> World {
        let (grid, goal) = t5_world();
        World { grid, goal }
    }

    fn sensor() -> SensorModel {
        SensorModel::new(SensorConfig::default())
    }

    #[test]
    fn start_on_goal_takes_zero_steps() {
        let world = t5();
        let mut planner = FrontierPlanner::new(sensor());
        let start = Pose { cell: world.goal, heading: Heading::N };
        let res = run_episode(&world, start, &mut planner, &sensor(), 100);
        assert_eq!((res.steps, res.status), (0, EpisodeStatus::ReachedGoal));
    }

    #[test]
    fn zero_budget_times_out() {
        let world = t5();
        let mut planner = FrontierPlanner::new(sensor());
        let res = run_episode(&world, Pose::new(4, 0, Heading::E), &mut planner, &sensor(), 0);
        assert_eq!((res.steps, res.status), (0, EpisodeStatus::Timeout));
    }

    #[test]
    fn frontier_on_t5_is_no_better_than_oracle() {
        let world = t5();
        let start = Pose::new(4, 0, Heading::E);
        let mut frontier = FrontierPlanner::new(sensor());
        let res = run_episode(&world, start, &mut frontier, &sensor(), 1000);
        assert_eq!(res.status, EpisodeStatus::ReachedGoal);
        let optimal = oracle_plan(&world.grid, start, world.goal).unwrap().actions.len();
        assert!(res.steps >= optimal);
        let mut oracle = OraclePlanner::new(world.clone());
        let res = run_episode(&world, start, &mut oracle, &sensor(), 1000);
        assert_eq!(res.steps, optimal);
        assert_eq!(res.trajectory.last().unwrap().cell, world.goal);
    }

    #[test]
    fn trace_is_consistent_with_trajectory() {
        let world = generate_world(&WorldSpec::with_seed(4, 50)).unwrap();
        let start = Pose { cell: world.cells_of_class("road")[10], heading: Heading::E };
        let mut planner = Dc2gPlanner::new(OracleEstimator::new(world.clone()).unwrap(), sensor());
        let res = run_episode(&world, start, &mut planner, &sensor(), 5000);
        assert_eq!(res.status, EpisodeStatus::ReachedGoal);
        assert_eq!(res.trajectory.len(), res.steps + 1);
        assert_eq!(res.plan_ms.len(), res.steps);
        for (rec, pose) in res.trace.iter().zip(&res.trajectory) {
            assert_eq!(rec.pose, *pose);
        }
        assert!(res.trace.windows(2).all(|w| w[0].observed_count <= w[1].observed_count));
    }

    #[test]
    fn sealed_world_gives_up_for_every_planner() {
        let world = generate_world(&WorldSpec::with_seed(11, 50)).unwrap().sealed().unwrap();
        let start = Pose { cell: world.cells_of_class("road")[3], heading: Heading::N };
        let p = world.grid.palette().clone();
        let mut planners: Vec<Box<dyn Planner>> = vec![
            Box::new(FrontierPlanner::new(sensor())),
            Box::new(Dc2gPlanner::new(HeuristicEstimator::new(p), sensor())),
            Box::new(Dc2gPlanner::new(OracleEstimator::new(world.clone()).unwrap(), sensor())),
            Box::new(OraclePlanner::new(world.clone())),
        ];
        for planner in &mut planners {
            let res = run_episode(&world, start, planner, &sensor(), 10_000);
            assert_eq!(res.status, EpisodeStatus::GaveUp);
        }
    }
}
