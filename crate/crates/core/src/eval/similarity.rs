//! Bag-of-words map similarity: class histograms of fixed-size blocks,
//! clustered into a small vocabulary, compared as word histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic::SemanticGrid;

pub const VOCABULARY_SIZE: usize = 20;
pub const DEFAULT_BLOCK: usize = 8;
const KMEANS_ITERATIONS: usize = 50;
const KMEANS_RESTARTS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("need at least {needed} blocks to build the vocabulary, got {got}")]
    TooFewBlocks { needed: usize, got: usize },
    #[error("block size must be positive")]
    ZeroBlock,
    #[error("maps use palettes of different sizes")]
    PaletteMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityModel {
    pub block: usize,
    pub vocabulary: Vec<Vec<f64>>,
    pub train_histograms: Vec<Vec<f64>>,
}

/// Normalized class-count histogram of every `block` x `block` tile,
/// row-major; partial tiles at the right and bottom edges are included.
pub fn block_histograms(map: &SemanticGrid, block: usize) -> Vec<Vec<f64>> {
    let classes = map.palette().len();
    let (w, h) = map.dims();
    let mut out = Vec::new();
    for r0 in (0..h).step_by(block) {
        for c0 in (0..w).step_by(block) {
            let mut hist = vec![0.0; classes];
            let mut n = 0.0;
            for r in r0..(r0 + block).min(h) {
                for c in c0..(c0 + block).min(w) {
                    hist[map.get(crate::semantic::Cell::new(r, c)) as usize] += 1.0;
                    n += 1.0;
                }
            }
            hist.iter_mut().for_each(|x| *x /= n);
            out.push(hist);
        }
    }
    out
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(c, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            let mut idx = points.len() - 1;
            for (i, &di) in d.iter().enumerate() {
                if t < di {
                    idx = i;
                    break;
                }
                t -= di;
            }
            idx
        } else {
            rng.gen_range(0..points.len())
        };
        centroids.push(points[pick].clone());
        for (di, p) in d.iter_mut().zip(points) {
            *di = di.min(dist2(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd's k-means with k-means++ seeding; returns (centroids, inertia).
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, f64) {
    let dim = points[0].len();
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assign = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_ITERATIONS {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let (i, _) = nearest(&centroids, p);
            changed |= *a != i;
            *a = i;
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for (j, (sum, &n)) in sums.into_iter().zip(&counts).enumerate() {
            if n > 0 {
                centroids[j] = sum.into_iter().map(|s| s / n as f64).collect();
            }
            // empty clusters keep their previous centroid
        }
    }
    let inertia = points.iter().map(|p| nearest(&centroids, p).1).sum();
    (centroids, inertia)
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    best.expect("at least one restart").0
}

impl SimilarityModel {
    /// Normalized histogram of nearest-word assignments over the map's blocks.
    pub fn word_histogram(&self, map: &SemanticGrid) -> Vec<f64> {
        let blocks = block_histograms(map, self.block);
        let mut hist = vec![0.0; self.vocabulary.len()];
        for b in &blocks {
            hist[nearest(&self.vocabulary, b).0] += 1.0;
        }
        let n = blocks.len().max(1) as f64;
        hist.iter_mut().for_each(|x| *x /= n);
        hist
    }
}

pub fn build_similarity_model(train_maps: &[SemanticGrid], block: usize, seed: u64) -> Result<SimilarityModel, SimilarityError> {
    if block == 0 {
        return Err(SimilarityError::ZeroBlock);
    }
    if train_maps.windows(2).any(|w| w[0].palette().len() != w[1].palette().len()) {
        return Err(SimilarityError::PaletteMismatch);
    }
    let points: Vec<Vec<f64>> = train_maps.iter().flat_map(|m| block_histograms(m, block)).collect();
    if points.len() < VOCABULARY_SIZE {
        return Err(SimilarityError::TooFewBlocks {
            needed: VOCABULARY_SIZE,
            got: points.len(),
        });
    }
    let mut model = SimilarityModel {
        block,
        vocabulary: kmeans(&points, VOCABULARY_SIZE, seed),
        train_histograms: Vec::new(),
    };
    model.train_histograms = train_maps.iter().map(|m| model.word_histogram(m)).collect();
    Ok(model)
}

/// Minimum L1 distance to a training map's word histogram, halved into [0, 1].
/// 0 means the test map looks like some training map.
pub fn similarity_score(model: &SimilarityModel, test_map: &SemanticGrid) -> f64 {
    let h = model.word_histogram(test_map);
    model
        .train_histograms
        .iter()
        .map(|t| t.iter().zip(&h).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0)
}
