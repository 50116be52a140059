//! Observation masks and (partial map, masked cost-to-go) training pairs.
//!
//! On-disk layout:
//!
//! ```text
//! out/
//!   manifest.json
//!   palette.json
//!   train/w0000_m000_map.png   train/w0000_m000_c2g.png   ...
//!   val/...
//!   test/...
//! ```
//!
//! Mask 0 of every world is the full mask; the rest are sensor sweeps along
//! random walks of varying length.

use std::fs;
use std::path::Path;

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::{apply_mask, dijkstra_cost_to_go, encode_c2g, traversable_mask, CostmapError};
use crate::semantic::{read_png, resize_nearest, write_png, BinaryGrid, Cell, SemanticError, SemanticGrid, BLACK};
use crate::sim::{step, Heading, PlannerAction, Pose, SensorConfig, SensorModel};
use crate::world::{generate_world, World, WorldError, WorldSpec};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("map has no traversable cell to start a sweep from")]
    NoTraversableCells,
    #[error("split fractions must be non-negative with a positive sum, got {0:?}")]
    BadSplit([f64; 3]),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Costmap(#[from] CostmapError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("pair {0} violates mask containment")]
    Containment(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Mixes a base seed with two stream indices (SplitMix64 finaliser).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED69));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub seed: u64,
    /// Poses on the walk; 0 means the full mask.
    pub sweep_count: usize,
    #[serde(default)]
    pub sensor: SensorConfig,
    /// Fixed first pose. When absent it is drawn from road cells, or from any
    /// traversable cell if the map has no road.
    #[serde(default)]
    pub start: Option<Pose>,
}

/// Poses of the random walk behind a mask.
///
/// The walk for `sweep_count = k` is a prefix of the walk for `k + 1` under
/// the same seed.
pub fn mask_walk(world: &SemanticGrid, spec: &MaskSpec) -> Result<Vec<Pose>, DatasetError> {
    if spec.sweep_count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start = match spec.start {
        Some(p) => p,
        None => {
            let road: Vec<Cell> = world
                .palette()
                .id_of_name("road")
                .map(|id| world.cells_of(id))
                .unwrap_or_default();
            let pool = if road.is_empty() {
                world.iter_cells().filter(|&c| world.is_traversable(c)).collect()
            } else {
                road
            };
            let cell = *pool.choose(&mut rng).ok_or(DatasetError::NoTraversableCells)?;
            Pose {
                cell,
                heading: Heading::ALL[rng.gen_range(0..4)],
            }
        }
    };
    let mut walk = Vec::with_capacity(spec.sweep_count);
    let mut pose = start;
    walk.push(pose);
    while walk.len() < spec.sweep_count {
        let action = match rng.gen_range(0..4) {
            0 => PlannerAction::TurnLeft,
            1 => PlannerAction::TurnRight,
            _ => PlannerAction::Forward,
        };
        pose = step(world, pose, action);
        walk.push(pose);
    }
    Ok(walk)
}

/// Union of the sensor wedges along [`mask_walk`].
pub fn generate_mask(world: &SemanticGrid, spec: &MaskSpec) -> Result<BinaryGrid, DatasetError> {
    let (w, h) = world.dims();
    if spec.sweep_count == 0 {
        return Ok(BinaryGrid::new(w, h, true));
    }
    let sensor = SensorModel::new(spec.sensor);
    let mut mask = BinaryGrid::new(w, h, false);
    for pose in mask_walk(world, spec)? {
        for cell in sensor.visible_cells(pose, w, h) {
            mask.set(cell, true);
        }
    }
    Ok(mask)
}

/// Map with every cell outside `mask` replaced by the unobserved class.
pub fn mask_map(world: &SemanticGrid, mask: &BinaryGrid) -> SemanticGrid {
    let mut out = world.clone();
    let unobserved = world.palette().unobserved_id();
    for cell in world.iter_cells() {
        if !mask.get(cell) {
            out.set(cell, unobserved);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub seed: u64,
    /// Side of the emitted square images.
    pub image_size: u32,
    /// Fractions of worlds assigned to train, val, test.
    pub split: [f64; 3],
    pub sensor: SensorConfig,
    /// Longest random walk; `None` picks `2 * (width + height)`.
    pub max_sweep: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            image_size: 256,
            split: [0.8, 0.1, 0.1],
            sensor: SensorConfig::default(),
            max_sweep: None,
        }
    }
}

impl DatasetConfig {
    /// Mask `index` for world `world_index`; index 0 is the full mask.
    pub fn mask_spec(&self, world: &SemanticGrid, world_index: usize, index: usize) -> MaskSpec {
        let seed = derive_seed(self.seed, world_index as u64, index as u64);
        let max = self.max_sweep.unwrap_or(2 * (world.width() + world.height())).max(1);
        let sweep_count = if index == 0 {
            0
        } else {
            ChaCha8Rng::seed_from_u64(seed ^ 0x5eed).gen_range(1..=max)
        };
        MaskSpec {
            seed,
            sweep_count,
            sensor: self.sensor,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub input: String,
    pub target: String,
    pub world: String,
    pub mask: String,
    pub goal: [usize; 2],
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub pairs: Vec<PairEntry>,
    pub palette: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| DatasetError::Json {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Number of worlds per split. Rounds train and val, test takes the rest.
pub fn split_counts(n: usize, split: [f64; 3]) -> Result<[usize; 3], DatasetError> {
    let total: f64 = split.iter().sum();
    if split.iter().any(|f| f.is_nan() || *f < 0.0) || total.is_nan() || total <= 0.0 {
        return Err(DatasetError::BadSplit(split));
    }
    let train = ((n as f64) * split[0] / total).round() as usize;
    let train = train.min(n);
    let val = (((n as f64) * split[1] / total).round() as usize).min(n - train);
    Ok([train, val, n - train - val])
}

/// Worlds from consecutive derived seeds.
pub fn generate_worlds(count: usize, width: usize, height: usize, seed: u64) -> Result<Vec<World>, WorldError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut spec = WorldSpec::with_seed(derive_seed(seed, 0xd0, i as u64), width);
            spec.height = height;
            generate_world(&spec)
        })
        .collect()
}

/// Renders the (input, target) images of one mask at `size` x `size`.
pub fn render_pair(world: &World, full_c2g: &RgbImage, mask: &BinaryGrid, size: u32) -> Result<(RgbImage, RgbImage), DatasetError> {
    let input = mask_map(&world.grid, mask).to_image();
    let target = apply_mask(full_c2g, mask)?;
    Ok((resize_nearest(&input, size, size), resize_nearest(&target, size, size)))
}

/// Every unobserved (black) input pixel is black in the target.
pub fn pair_is_consistent(input: &RgbImage, target: &RgbImage) -> bool {
    input.dimensions() == target.dimensions()
        && input
            .pixels()
            .zip(target.pixels())
            .all(|(i, t)| i.0 != BLACK || t.0 == BLACK)
}

/// Writes `masks_per_world` pairs for every world plus the manifest.
pub fn build_training_set(
    worlds: &[World],
    masks_per_world: usize,
    out_dir: &Path,
    config: &DatasetConfig,
) -> Result<Manifest, DatasetError> {
    let counts = split_counts(worlds.len(), config.split)?;
    for split in SPLITS {
        let dir = out_dir.join(split);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }
    let split_of = |i: usize| {
        if i < counts[0] {
            SPLITS[0]
        } else if i < counts[0] + counts[1] {
            SPLITS[1]
        } else {
            SPLITS[2]
        }
    };
    let fields: Vec<RgbImage> = worlds
        .par_iter()
        .map(|w| {
            let field = dijkstra_cost_to_go(&traversable_mask(&w.grid), w.goal)?;
            Ok(encode_c2g(&field)?)
        })
        .collect::<Result<_, DatasetError>>()?;
    let jobs: Vec<(usize, usize)> = (0..worlds.len())
        .flat_map(|w| (0..masks_per_world).map(move |m| (w, m)))
        .collect();
    let pairs = jobs
        .par_iter()
        .map(|&(wi, mi)| {
            let world = &worlds[wi];
            let spec = config.mask_spec(&world.grid, wi, mi);
            let mask = generate_mask(&world.grid, &spec)?;
            let (input, target) = render_pair(world, &fields[wi], &mask, config.image_size)?;
            let world_id = format!("w{wi:04}");
            let mask_id = format!("m{mi:03}");
            let split = split_of(wi);
            let input_rel = format!("{split}/{world_id}_{mask_id}_map.png");
            let target_rel = format!("{split}/{world_id}_{mask_id}_c2g.png");
            write_png(&out_dir.join(&input_rel), &input)?;
            write_png(&out_dir.join(&target_rel), &target)?;
            Ok(PairEntry {
                input: input_rel,
                target: target_rel,
                world: world_id,
                mask: mask_id,
                goal: [world.goal.row, world.goal.col],
                split: split.to_string(),
            })
        })
        .collect::<Result<Vec<_>, DatasetError>>()?;
    let palette_path = out_dir.join("palette.json");
    let palette = worlds
        .first()
        .map(|w| w.grid.palette().to_json())
        .unwrap_or_else(|| crate::semantic::Palette::default_palette().to_json());
    fs::write(&palette_path, palette).map_err(io_err(&palette_path))?;
    let manifest = Manifest {
        pairs,
        palette: "palette.json".to_string(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

/// Re-reads every pair of a written dataset and checks mask containment.
/// Returns the number of pairs checked.
pub fn verify_dataset(out_dir: &Path) -> Result<usize, DatasetError> {
    let manifest = Manifest::load(&out_dir.join("manifest.json"))?;
    manifest.pairs.par_iter().try_for_each(|pair| {
        let input = read_png(&out_dir.join(&pair.input))?;
        let target = read_png(&out_dir.join(&pair.target))?;
        if pair_is_consistent(&input, &target) {
            Ok(())
        } else {
            Err(DatasetError::Containment(pair.input.clone()))
        }
    })?;
    Ok(manifest.pairs.len())
}
