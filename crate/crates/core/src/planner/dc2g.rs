use std::cmp::Reverse;

use image::RgbImage;

use super::{explore_towards, frontiers, goal_phase, reachable, PlanDiagnostics, PlanError, PlanOutcome, Planner};
use crate::costmap::{decode_c2g, traversable_mask};
use crate::estimator::{CostToGoEstimator, ESTIMATOR_IMAGE_SIZE};
use crate::semantic::resize_nearest;
use crate::sim::{Belief, Pose, SensorModel};

/// The belief as the estimator sees it: a nearest-neighbour upscale to 256x256.
pub fn render_belief(belief: &Belief) -> RgbImage {
    resize_nearest(&belief.map().to_image(), ESTIMATOR_IMAGE_SIZE, ESTIMATOR_IMAGE_SIZE)
}

/// Score-ordered key: higher estimated value first, then nearer, then row-major.
/// Filtered (non-gray) cells rank after every scored cell.
fn rank(score: Option<f64>, depth: u32) -> (Reverse<Option<u64>>, u32) {
    // decoded scores are non-negative, where the IEEE bit pattern is monotone
    (Reverse(score.map(f64::to_bits)), depth)
}

pub fn dc2g_plan<E: CostToGoEstimator + ?Sized>(
    belief: &Belief,
    pose: Pose,
    estimator: &mut E,
    sensor: &SensorModel,
) -> Result<PlanOutcome, PlanError> {
    let map = belief.map();
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
    diag.candidates = sets.reachable_expanding.len();
    if sets.reachable_expanding.is_empty() {
        return Ok(PlanOutcome::give_up(diag));
    }
    let estimate = estimator.estimate(&render_belief(belief))?;
    let scores = decode_c2g(&estimate, map.width(), map.height());
    explore_towards(
        &r,
        pose,
        &sets.reachable_expanding,
        |c| rank(scores.get(c), r.depth(c).expect("candidate is reachable")),
        |c| sets.headings_at(c).collect(),
        diag,
    )
}

/// Cost-to-go guided frontier planner.
pub struct Dc2gPlanner<E> {
    estimator: E,
    sensor: SensorModel,
}

impl<E: CostToGoEstimator> Dc2gPlanner<E> {
    pub fn new(estimator: E, sensor: SensorModel) -> Self {
        Self { estimator, sensor }
    }

    pub fn estimator(&self) -> &E {
        &self.estimator
    }
}

impl<E: CostToGoEstimator> Planner for Dc2gPlanner<E> {
    fn plan(&mut self, belief: &Belief, pose: Pose) -> Result<PlanOutcome, PlanError> {
        dc2g_plan(belief, pose, &mut self.estimator, &self.sensor)
    }
}
