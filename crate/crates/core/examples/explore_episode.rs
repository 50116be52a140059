//! One world, one start, four planners: steps to reach the goal.

use dc2g::estimator::{HeuristicEstimator, OracleEstimator};
use dc2g::planner::{run_episode, Dc2gPlanner, FrontierPlanner, OraclePlanner};
use dc2g::sim::SensorModel;
use dc2g::world::{generate_world, WorldSpec};
use dc2g::{EpisodeStatus, Heading, Planner, Pose, SensorConfig};

pub fn run(seed: u64) -> anyhow::Result<Vec<(String, usize, EpisodeStatus)>> {
    let world = generate_world(&WorldSpec::with_seed(seed, 50))?;
    let sensor = SensorModel::new(SensorConfig::default());
    let start = Pose { cell: world.cells_of_class("road")[0], heading: Heading::E };
    let palette = world.grid.palette().clone();
    let planners: Vec<(&str, Box<dyn Planner>)> = vec![
        ("oracle", Box::new(OraclePlanner::new(world.clone()))),
        ("dc2g:oracle", Box::new(Dc2gPlanner::new(OracleEstimator::new(world.clone())?, sensor.clone()))),
        ("dc2g:heuristic", Box::new(Dc2gPlanner::new(HeuristicEstimator::new(palette), sensor.clone()))),
        ("frontier", Box::new(FrontierPlanner::new(sensor.clone()))),
    ];
    let mut out = Vec::new();
    for (name, mut planner) in planners {
        let res = run_episode(&world, start, &mut planner, &sensor, 10_000);
        println!("{name:>15}: {:>4} steps, {}", res.steps, res.status.label());
        out.push((name.to_string(), res.steps, res.status));
    }
    Ok(out)
}

fn main() -> anyhow::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    run(seed).map(|_| ())
}
