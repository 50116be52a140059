//! Cost-to-go estimators consumed by the guided planner.
//!
//! An estimator maps a 256x256 rendering of the belief map to a 256x256
//! cost-to-go image in the gray/red/black encoding of [`crate::costmap`].

use std::sync::Arc;

use image::RgbImage;
use thiserror::Error;

use crate::costmap::{apply_mask, dijkstra_cost_to_go, encode_c2g, traversable_mask, CostmapError};
use crate::semantic::{resize_nearest, BinaryGrid, Palette, BLACK, RED};
use crate::world::World;

/// Side length of estimator input and output images.
pub const ESTIMATOR_IMAGE_SIZE: u32 = 256;

const MID_GRAY: [u8; 3] = [128, 128, 128];

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("belief disagrees with the world at ({row}, {col})")]
    BeliefWorldMismatch { row: usize, col: usize },
    #[error("no response within {0} ms")]
    Timeout(u64),
    #[error("bridge connection closed: {0}")]
    BrokenPipe(String),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("expected a 256x256 image, got {width}x{height}")]
    BadImageDims { width: u32, height: u32 },
    #[error("handshake rejected: {0:?}")]
    Handshake(String),
    #[error(transparent)]
    Costmap(#[from] CostmapError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub trait CostToGoEstimator {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError>;
}

impl<E: CostToGoEstimator + ?Sized> CostToGoEstimator for Box<E> {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        (**self).estimate(belief)
    }
}

impl<E: CostToGoEstimator + ?Sized> CostToGoEstimator for &mut E {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        (**self).estimate(belief)
    }
}

/// Serves the exact training target online: the world's cost-to-go,
/// masked to the cells the belief has observed.
#[derive(Debug, Clone)]
pub struct OracleEstimator {
    world: World,
    full: RgbImage,
    world_image: RgbImage,
}

impl OracleEstimator {
    pub fn new(world: World) -> Result<Self, EstimatorError> {
        let field = dijkstra_cost_to_go(&traversable_mask(&world.grid), world.goal)?;
        let full = encode_c2g(&field)?;
        let world_image = world.grid.to_image();
        Ok(Self {
            world,
            full,
            world_image,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Full-map cost-to-go rendering at grid resolution.
    pub fn full_c2g(&self) -> &RgbImage {
        &self.full
    }
}

impl CostToGoEstimator for OracleEstimator {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        let (w, h) = self.world.grid.dims();
        let cells = resize_nearest(belief, w as u32, h as u32);
        let mut bits = Vec::with_capacity(w * h);
        for (col, row, px) in cells.enumerate_pixels() {
            let observed = px.0 != BLACK;
            if observed && px.0 != self.world_image.get_pixel(col, row).0 {
                return Err(EstimatorError::BeliefWorldMismatch {
                    row: row as usize,
                    col: col as usize,
                });
            }
            bits.push(observed);
        }
        let mask = BinaryGrid::from_bits(w, h, bits).expect("dims match");
        let masked = apply_mask(&self.full, &mask)?;
        Ok(resize_nearest(&masked, ESTIMATOR_IMAGE_SIZE, ESTIMATOR_IMAGE_SIZE))
    }
}

/// Context-blind control: every observed traversable pixel gets the same mid
/// gray, so the guided planner falls back to its nearest-first tie-break.
#[derive(Debug, Clone)]
pub struct HeuristicEstimator {
    palette: Arc<Palette>,
}

impl HeuristicEstimator {
    pub fn new(palette: Arc<Palette>) -> Self {
        Self { palette }
    }
}

impl CostToGoEstimator for HeuristicEstimator {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        let mut out = belief.clone();
        for px in out.pixels_mut() {
            px.0 = if px.0 == BLACK {
                BLACK
            } else if self.palette.color_is_traversable(px.0) {
                MID_GRAY
            } else {
                RED
            };
        }
        Ok(out)
    }
}
