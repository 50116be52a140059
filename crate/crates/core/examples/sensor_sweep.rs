//! Drives the agent along the road and reports how much of the map it sees.

use dc2g::sim::{step, SensorModel};
use dc2g::world::{generate_world, WorldSpec};
use dc2g::{Belief, Heading, PlannerAction, Pose, SensorConfig};

pub fn run() -> anyhow::Result<Vec<usize>> {
    let world = generate_world(&WorldSpec::with_seed(3, 50))?;
    let sensor = SensorModel::new(SensorConfig::new(90.0, 8)?);
    let road = world.cells_of_class("road");
    let start = road.iter().copied().min_by_key(|c| (c.col, c.row)).expect("world has a road");
    let mut pose = Pose { cell: start, heading: Heading::E };
    let mut belief = Belief::blank_like(&world.grid);
    let mut seen = vec![belief.observe(&world.grid, pose, &sensor)];
    for _ in 0..49 {
        pose = step(&world.grid, pose, PlannerAction::Forward);
        seen.push(belief.observe(&world.grid, pose, &sensor));
    }
    println!("observed {} of {} cells after {} poses", belief.observed_count(), 50 * 50, seen.len());
    Ok(seen)
}

fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
