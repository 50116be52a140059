use dc2g::eval::benchmark::{run_one, sample_starts, EstimatorKind, PlannerSpec};
use dc2g::planner::oracle_plan;
use dc2g::sim::SensorModel;
use dc2g::world::{generate_world, WorldSpec};
use dc2g::{EpisodeStatus, SensorConfig};
use proptest::prelude::*;

const PLANNERS: [PlannerSpec; 3] = [
    PlannerSpec::Frontier,
    PlannerSpec::Dc2g(EstimatorKind::Oracle),
    PlannerSpec::Dc2g(EstimatorKind::Heuristic),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn episodes_reach_goal_legally(seed in any::<u64>(), dims in 20usize..60, fov in prop_oneof![Just(90.0), Just(60.0), Just(180.0)]) {
        let world = generate_world(&WorldSpec::with_seed(seed, dims)).unwrap();
        let sensor = SensorModel::new(SensorConfig::new(fov, 8).unwrap());
        let start = sample_starts(&world, 1, seed)[0];
        let optimal = oracle_plan(&world.grid, start, world.goal).unwrap().actions.len();
        for spec in PLANNERS {
            let res = run_one(spec, &world, start, &sensor, 10_000, None);
            prop_assert_eq!(&res.status, &EpisodeStatus::ReachedGoal, "{}", spec);
            prop_assert!(res.steps >= optimal);
            prop_assert_eq!(res.trajectory.last().unwrap().cell, world.goal);
            for pair in res.trajectory.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                prop_assert!(world.grid.is_traversable(b.cell));
                prop_assert!(a.cell == b.cell || a.cell.is_adjacent4(b.cell));
                prop_assert!(a != b, "every action changes the pose");
            }
            for cell in world.grid.iter_cells() {
                if res.belief.is_observed(cell) {
                    prop_assert_eq!(res.belief.map().get(cell), world.grid.get(cell));
                }
            }
        }
    }

    #[test]
    fn sealed_worlds_give_up(seed in any::<u64>()) {
        let world = generate_world(&WorldSpec::with_seed(seed, 40)).unwrap().sealed().unwrap();
        let sensor = SensorModel::new(SensorConfig::default());
        let start = sample_starts(&world, 1, seed)[0];
        for spec in PLANNERS.into_iter().chain([PlannerSpec::Oracle]) {
            let res = run_one(spec, &world, start, &sensor, 10_000, None);
            prop_assert_eq!(&res.status, &EpisodeStatus::GaveUp, "{}", spec);
        }
    }
}

#[test]
fn subgoals_are_traversable() {
    let world = generate_world(&WorldSpec::with_seed(21, 50)).unwrap();
    let sensor = SensorModel::new(SensorConfig::default());
    let start = sample_starts(&world, 1, 0)[0];
    let res = run_one(PlannerSpec::Dc2g(EstimatorKind::Oracle), &world, start, &sensor, 10_000, None);
    assert_eq!(res.status, EpisodeStatus::ReachedGoal);
    for rec in &res.trace {
        if let Some(goal) = rec.subgoal {
            assert!(world.grid.is_traversable(goal));
        }
    }
}
