//! Scores a crude cost-to-go guess against the true field.

use dc2g::costmap::{dijkstra_cost_to_go, encode_c2g, traversable_mask};
use dc2g::estimator::{CostToGoEstimator, HeuristicEstimator};
use dc2g::eval::{classify_pixels, pixel_l1, precision_recall, PixelClassTask};
use dc2g::world::{generate_world, WorldSpec};

pub fn run() -> anyhow::Result<f64> {
    let world = generate_world(&WorldSpec::with_seed(2, 50))?;
    let truth = encode_c2g(&dijkstra_cost_to_go(&traversable_mask(&world.grid), world.goal)?)?;
    let guess = HeuristicEstimator::new(world.grid.palette().clone()).estimate(&world.grid.to_image())?;
    let l1 = pixel_l1(&guess, &truth)?;
    println!("per-pixel L1: {l1:.4}");
    for task in [PixelClassTask::Traversable, PixelClassTask::LowC2g] {
        let pr = precision_recall(&classify_pixels(&guess, task), &classify_pixels(&truth, task))?;
        println!("{task:?}: precision {:?} recall {:?}", pr.precision, pr.recall);
    }
    Ok(l1)
}

fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
