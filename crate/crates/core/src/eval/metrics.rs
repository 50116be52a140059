use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmap::GRAY_SATURATION_LIMIT;
use crate::dataset::{DatasetError, Manifest};
use crate::semantic::{read_png, resize_nearest, rgb_to_hsv, BinaryGrid, Rgb};

/// Brightness above which a gray pixel counts as low cost-to-go.
pub const LOW_C2G_VALUE: f64 = 0.9;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("image sizes differ: {a:?} vs {b:?}")]
    DimensionMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("oracle step count must be at least 1")]
    ZeroOracle,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("no prediction found for {0}")]
    MissingPrediction(String),
}

pub fn pixel_l1(pred: &RgbImage, target: &RgbImage) -> Result<f64, MetricError> {
    if pred.dimensions() != target.dimensions() {
        let d = |i: &RgbImage| (i.width() as usize, i.height() as usize);
        return Err(MetricError::DimensionMismatch { a: d(pred), b: d(target) });
    }
    let total: u64 = pred
        .as_raw()
        .iter()
        .zip(target.as_raw())
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .sum();
    let n = pred.as_raw().len().max(1) as f64;
    Ok(total as f64 / (255.0 * n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelClassTask {
    Traversable,
    LowC2g,
}

impl PixelClassTask {
    pub fn holds(self, rgb: Rgb) -> bool {
        let hsv = rgb_to_hsv(rgb);
        match self {
            PixelClassTask::Traversable => hsv.s < GRAY_SATURATION_LIMIT,
            PixelClassTask::LowC2g => hsv.v > LOW_C2G_VALUE && hsv.s < GRAY_SATURATION_LIMIT,
        }
    }
}

pub fn classify_pixels(img: &RgbImage, task: PixelClassTask) -> BinaryGrid {
    let w = img.width() as usize;
    BinaryGrid::from_bits(
        w,
        img.height() as usize,
        img.pixels().map(|p| task.holds(p.0)).collect(),
    )
    .expect("one bit per pixel")
}

/// Confusion counts plus the derived rates. A rate with an empty
/// denominator is `None`, never 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn precision_recall(pred: &BinaryGrid, truth: &BinaryGrid) -> Result<PrecisionRecall, MetricError> {
    if pred.dims() != truth.dims() {
        return Err(MetricError::DimensionMismatch {
            a: pred.dims(),
            b: truth.dims(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&p, &t) in pred.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(PrecisionRecall {
        precision: rate(tp, tp + fp),
        recall: rate(tp, tp + fn_),
        tp,
        fp,
        fn_,
    })
}

/// Extra time over the oracle, in percent.
pub fn extra_time_pct(steps: usize, oracle_steps: usize) -> Result<f64, MetricError> {
    if oracle_steps == 0 {
        return Err(MetricError::ZeroOracle);
    }
    Ok((steps as f64 - oracle_steps as f64) / oracle_steps as f64 * 100.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictionScore {
    pub target: String,
    pub l1: f64,
    pub traversable: PrecisionRecall,
    pub low_c2g: PrecisionRecall,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreReport {
    pub count: usize,
    pub mean_l1: Option<f64>,
    pub max_l1: Option<f64>,
    pub mean_traversable_precision: Option<f64>,
    pub mean_traversable_recall: Option<f64>,
    pub mean_low_c2g_precision: Option<f64>,
    pub mean_low_c2g_recall: Option<f64>,
    pub images: Vec<PredictionScore>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Scores one prediction against its target. Predictions of another size are
/// resampled (nearest) to the target first.
pub fn score_prediction(pred: &RgbImage, target: &RgbImage) -> Result<(f64, PrecisionRecall, PrecisionRecall), MetricError> {
    let pred = if pred.dimensions() == target.dimensions() {
        pred.clone()
    } else {
        resize_nearest(pred, target.width(), target.height())
    };
    let pr = |task| precision_recall(&classify_pixels(&pred, task), &classify_pixels(target, task));
    Ok((
        pixel_l1(&pred, target)?,
        pr(PixelClassTask::Traversable)?,
        pr(PixelClassTask::LowC2g)?,
    ))
}

/// Scores every pair of the dataset in `data_dir` (optionally one split) for
/// which `pred_dir` holds a file named like the target.
pub fn score_predictions(data_dir: &Path, pred_dir: &Path, split: Option<&str>) -> Result<ScoreReport, MetricError> {
    let manifest = Manifest::load(&data_dir.join("manifest.json"))?;
    let mut images = Vec::new();
    for pair in manifest.pairs.iter().filter(|p| split.is_none_or(|s| p.split == s)) {
        let name = Path::new(&pair.target).file_name().expect("target has a file name");
        let candidates = [pred_dir.join(&pair.target), pred_dir.join(name)];
        let Some(path) = candidates.iter().find(|p| p.exists()) else {
            continue;
        };
        let pred = read_png(path).map_err(DatasetError::from)?;
        let target = read_png(&data_dir.join(&pair.target)).map_err(DatasetError::from)?;
        let (l1, traversable, low_c2g) = score_prediction(&pred, &target)?;
        images.push(PredictionScore {
            target: pair.target.clone(),
            l1,
            traversable,
            low_c2g,
        });
    }
    if images.is_empty() {
        return Err(MetricError::MissingPrediction(pred_dir.display().to_string()));
    }
    Ok(ScoreReport {
        count: images.len(),
        mean_l1: mean(images.iter().map(|s| Some(s.l1))),
        max_l1: images.iter().map(|s| s.l1).reduce(f64::max),
        mean_traversable_precision: mean(images.iter().map(|s| s.traversable.precision)),
        mean_traversable_recall: mean(images.iter().map(|s| s.traversable.recall)),
        mean_low_c2g_precision: mean(images.iter().map(|s| s.low_c2g.precision)),
        mean_low_c2g_recall: mean(images.iter().map(|s| s.low_c2g.recall)),
        images,
    })
}
